"""Prediction service speaking the simulator's wire protocol.

Frames are big-endian with magic "P2PR":

    request:  magic | u8 0x01 | u16 width | u16 height | w*h tri-state bytes
    response: magic | u8 0x02 | u16 width | u16 height | w*h bytes
    error:    magic | u8 0xFF | u16 length | UTF-8 message

One request is in flight per connection at a time; malformed traffic is
answered with an error frame and the connection stays open (garbage is
consumed a header at a time until the peer gives up).

Inference normalizes the window to [-1,1], runs the denoiser, snaps its
output to tri-state (the completer was trained on tri-state inputs, so
soft intermediates are out-of-distribution for it), runs the completer,
and maps the result back with y = round((t+1)*127.5).  The nets are fixed
at 120x120, so other request sizes are centered on an Unknown canvas
going in and cropped back coming out.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import UNKNOWN, UNKNOWN_T, threshold, to_bytes, to_unit
from .models import WINDOW
from .train import load_net

MAGIC = b"P2PR"
MSG_REQUEST = 0x01
MSG_RESPONSE = 0x02
MSG_ERROR = 0xFF


class ProtocolError(ValueError):
    """A frame failed to parse."""


class ConnectionClosed(Exception):
    """The peer closed between frames; not an error."""


# ---------------------------------------------------------------------------
# framing


def encode_request(cells: np.ndarray) -> bytes:
    cells = np.asarray(cells, dtype=np.uint8)
    if not np.isin(cells, (0, 100, 255)).all():
        raise ProtocolError("request payload must be tri-state bytes")
    h, w = cells.shape
    return MAGIC + struct.pack(">BHH", MSG_REQUEST, w, h) + cells.tobytes()


def encode_response(cells: np.ndarray) -> bytes:
    cells = np.asarray(cells, dtype=np.uint8)
    h, w = cells.shape
    return MAGIC + struct.pack(">BHH", MSG_RESPONSE, w, h) + cells.tobytes()


def encode_error(message: str) -> bytes:
    data = message.encode("utf-8")[:65535]
    return MAGIC + struct.pack(">BH", MSG_ERROR, len(data)) + data


def decode_frame(buf: bytes) -> tuple[int, np.ndarray | str]:
    """Parse one complete frame into (msg_type, payload)."""
    if len(buf) < 5:
        raise ProtocolError(f"frame too short ({len(buf)} bytes)")
    if buf[:4] != MAGIC:
        raise ProtocolError(f"bad magic {buf[:4]!r}")
    kind = buf[4]
    if kind == MSG_ERROR:
        if len(buf) < 7:
            raise ProtocolError("truncated error header")
        (length,) = struct.unpack(">H", buf[5:7])
        if len(buf) != 7 + length:
            raise ProtocolError(f"error frame length {len(buf)} does not match header {7 + length}")
        return kind, buf[7:].decode("utf-8", errors="replace")
    if kind in (MSG_REQUEST, MSG_RESPONSE):
        if len(buf) < 9:
            raise ProtocolError("truncated grid header")
        w, h = struct.unpack(">HH", buf[5:9])
        if w == 0 or h == 0:
            raise ProtocolError(f"zero-sized grid {w}x{h}")
        if len(buf) != 9 + w * h:
            raise ProtocolError(f"grid frame length {len(buf)} does not match header {9 + w * h}")
        cells = np.frombuffer(buf[9:], dtype=np.uint8).reshape(h, w).copy()
        if kind == MSG_REQUEST and not np.isin(cells, (0, 100, 255)).all():
            raise ProtocolError("request payload must be tri-state bytes")
        return kind, cells
    raise ProtocolError(f"unknown message type 0x{kind:02x}")


def _recv_exact(sock: socket.socket, n: int, started: bool) -> bytes:
    chunks, got = [], 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            if got == 0 and not started:
                raise ConnectionClosed
            raise ProtocolError(f"connection closed mid-frame ({got} of {n} bytes)")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> tuple[int, np.ndarray | str]:
    head = _recv_exact(sock, 5, started=False)
    if head[:4] != MAGIC:
        raise ProtocolError(f"bad magic {head[:4]!r}")
    kind = head[4]
    if kind == MSG_ERROR:
        length_raw = _recv_exact(sock, 2, started=True)
        (length,) = struct.unpack(">H", length_raw)
        body = _recv_exact(sock, length, started=True) if length else b""
        return decode_frame(head + length_raw + body)
    if kind in (MSG_REQUEST, MSG_RESPONSE):
        dims = _recv_exact(sock, 4, started=True)
        w, h = struct.unpack(">HH", dims)
        if w == 0 or h == 0:
            raise ProtocolError(f"zero-sized grid {w}x{h}")
        body = _recv_exact(sock, w * h, started=True)
        return decode_frame(head + dims + body)
    raise ProtocolError(f"unknown message type 0x{kind:02x}")


# ---------------------------------------------------------------------------
# inference


class ModelBundle:
    """Denoiser + completer checkpoints behind one predict() call."""

    def __init__(self, denoiser: nn.Module, completer: nn.Module):
        self.denoiser = denoiser.eval()
        self.completer = completer.eval()

    @classmethod
    def load(cls, checkpoint_dir: str | Path) -> "ModelBundle":
        ckpt = Path(checkpoint_dir)
        return cls(load_net(ckpt / "denoiser.pt"), load_net(ckpt / "completer.pt"))

    @torch.no_grad()
    def predict(self, cells: np.ndarray) -> np.ndarray:
        h, w = cells.shape
        canvas = np.full((WINDOW, WINDOW), UNKNOWN_T, dtype=np.float32)
        # center the request on the canvas; crop whatever hangs over
        dr, dc = (WINDOW - h) // 2, (WINDOW - w) // 2
        sr0, sc0 = max(0, -dr), max(0, -dc)
        cr0, cc0 = max(0, dr), max(0, dc)
        rows = min(h - sr0, WINDOW - cr0)
        cols = min(w - sc0, WINDOW - cc0)
        canvas[cr0 : cr0 + rows, cc0 : cc0 + cols] = to_unit(
            cells[sr0 : sr0 + rows, sc0 : sc0 + cols]
        )
        x = torch.from_numpy(canvas)[None, None]
        # the completer expects tri-state input, so quantize between stages
        denoised = threshold(to_bytes(self.denoiser(x)[0, 0].numpy()))
        t = self.completer(torch.from_numpy(to_unit(denoised))[None, None])[0, 0].numpy()
        out = np.full((h, w), UNKNOWN, dtype=np.uint8)
        out[sr0 : sr0 + rows, sc0 : sc0 + cols] = to_bytes(t)[
            cr0 : cr0 + rows, cc0 : cc0 + cols
        ]
        return out


class _Echo:
    """Stand-in bundle that predicts exactly what it saw."""

    def predict(self, cells: np.ndarray) -> np.ndarray:
        return cells.copy()


# ---------------------------------------------------------------------------
# server


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        bundle = self.server.bundle  # type: ignore[attr-defined]
        while True:
            try:
                kind, payload = read_frame(self.request)
            except ConnectionClosed:
                return
            except ProtocolError as e:
                try:
                    self.request.sendall(encode_error(str(e)))
                except OSError:
                    return
                if "closed mid-frame" in str(e):
                    return
                continue
            if kind != MSG_REQUEST:
                self.request.sendall(encode_error(f"expected a request, got type 0x{kind:02x}"))
                continue
            try:
                reply = bundle.predict(payload)
            except Exception as e:  # inference failure must not kill the server
                self.request.sendall(encode_error(f"prediction failed: {e}"))
                continue
            self.request.sendall(encode_response(reply))


class PredictorServer(socketserver.ThreadingTCPServer):
    """Serves a bundle (or echo) on host:port; stop() joins the thread."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, bundle, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.bundle = bundle
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "PredictorServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        if self._thread is not None:
            self._thread.join()
        self.server_close()

    def __enter__(self) -> "PredictorServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve(bundle_or_dir, host: str = "127.0.0.1", port: int = 7071, echo: bool = False) -> PredictorServer:
    """Build and start a server; pass a checkpoint dir or a ready bundle."""
    if echo:
        bundle = _Echo()
    elif isinstance(bundle_or_dir, (str, Path)):
        bundle = ModelBundle.load(bundle_or_dir)
    else:
        bundle = bundle_or_dir
    return PredictorServer(bundle, host, port).start()
