"""Floor-plan predictors and the merge of their local outputs.

A predictor takes a 120x120 tri-state window of the observed map and
returns a same-shaped byte image.  Three endpoints exist: Null (returns
the window unchanged), Oracle (reads the ground-truth floor plan, for
upper-bound experiments) and External (a TCP service speaking the frame
protocol below, typically a learned model).  Raw prediction bytes are
thresholded back to tri-state before use: below 80 is Occupied, above
120 is Free, anything between stays Unknown.

Wire protocol (big-endian):
    request:  magic "P2PR" | u8 0x01 | u16 width | u16 height | w*h bytes
    response: magic "P2PR" | u8 0x02 | u16 width | u16 height | w*h bytes
    error:    magic "P2PR" | u8 0xFF | u16 length | UTF-8 message
One request is in flight per connection at a time.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .frontier import FrontierCluster, LocalWindow
from .grid import CellState, GridMap

log = logging.getLogger(__name__)

MAGIC = b"P2PR"
MSG_REQUEST = 0x01
MSG_RESPONSE = 0x02
MSG_ERROR = 0xFF

OCC_BELOW = 80
FREE_ABOVE = 120


class ProtocolError(ValueError):
    """A frame failed to parse."""


class PredictorUnavailable(RuntimeError):
    """The external predictor could not be reached or answered garbage."""


class AlignmentError(ValueError):
    """Local predictions do not line up with their frontier clusters."""


class Provenance(IntEnum):
    UNKNOWN = 0
    OBSERVED = 1
    PREDICTED = 2


@dataclass
class PredictedMap:
    """Observed map augmented with predictions, plus per-cell provenance."""

    map: GridMap
    provenance: np.ndarray  # uint8 of Provenance values, same shape


def threshold_classify(raw: np.ndarray) -> np.ndarray:
    """Collapse raw prediction bytes to the three cell states."""
    raw = np.asarray(raw, dtype=np.uint8)
    out = np.full_like(raw, int(CellState.UNKNOWN))
    out[raw < OCC_BELOW] = int(CellState.OCCUPIED)
    out[raw > FREE_ABOVE] = int(CellState.FREE)
    return out


# ---------------------------------------------------------------------------
# Endpoints


class NullPredictor:
    """Predicts nothing: the window comes back unchanged."""

    def raw_predict(self, window: GridMap) -> np.ndarray:
        return window.cells.copy()


class OraclePredictor:
    """Answers from the ground-truth floor plan (walls only, no clutter).

    The window's world origin locates it on the plan; anything outside
    the plan's extent comes back Unknown.  Answers are cached per window
    position since the plan never changes.
    """

    def __init__(self, plan: GridMap):
        self.plan = plan
        self._cache: dict[tuple[int, int, int, int], np.ndarray] = {}

    def raw_predict(self, window: GridMap) -> np.ndarray:
        res = self.plan.resolution
        if abs(window.resolution - res) > 1e-12:
            raise AlignmentError(
                f"window resolution {window.resolution} does not match plan {res}"
            )
        fr0 = (window.origin.y - self.plan.origin.y) / res
        fc0 = (window.origin.x - self.plan.origin.x) / res
        r0, c0 = round(fr0), round(fc0)
        if abs(fr0 - r0) > 1e-6 or abs(fc0 - c0) > 1e-6:
            raise AlignmentError(f"window origin {tuple(window.origin)} is off the plan's cell grid")
        h, w = window.cells.shape
        key = (r0, c0, h, w)
        hit = self._cache.get(key)
        if hit is not None:
            return hit.copy()
        out = np.full((h, w), int(CellState.UNKNOWN), dtype=np.uint8)
        sr0, sr1 = max(r0, 0), min(r0 + h, self.plan.height)
        sc0, sc1 = max(c0, 0), min(c0 + w, self.plan.width)
        if sr0 < sr1 and sc0 < sc1:
            out[sr0 - r0 : sr1 - r0, sc0 - c0 : sc1 - c0] = self.plan.cells[sr0:sr1, sc0:sc1]
        self._cache[key] = out
        return out.copy()


class ExternalPredictor:
    """Client for a TCP prediction service."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def raw_predict(self, window: GridMap) -> np.ndarray:
        request = encode_request(window.cells)
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                sock.sendall(request)
                reply = _read_frame(sock)
        except (OSError, ProtocolError) as e:
            raise PredictorUnavailable(f"predictor at {self.host}:{self.port}: {e}") from None
        kind, payload = reply
        if kind == MSG_ERROR:
            raise PredictorUnavailable(
                f"predictor at {self.host}:{self.port} returned an error: {payload}"
            )
        cells = payload
        if cells.shape != window.cells.shape:
            raise PredictorUnavailable(
                f"predictor returned {cells.shape}, expected {window.cells.shape}"
            )
        return cells


Predictor = NullPredictor | OraclePredictor | ExternalPredictor


def endpoint_from_spec(spec: str, plan: GridMap | None = None) -> Predictor:
    """Build an endpoint from a CLI-style string: null, oracle, or host:port."""
    if spec == "null":
        return NullPredictor()
    if spec == "oracle":
        if plan is None:
            raise ValueError("oracle predictor needs the scene floor plan")
        return OraclePredictor(plan)
    host, sep, port = spec.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"predictor spec {spec!r} is not null, oracle, or host:port")
    return ExternalPredictor(host or "127.0.0.1", int(port))


def predict(endpoint: Predictor, window: LocalWindow) -> GridMap:
    """Run one window through a predictor and threshold to tri-state."""
    raw = endpoint.raw_predict(window.window)
    return GridMap(threshold_classify(raw), window.window.resolution, window.window.origin)


# ---------------------------------------------------------------------------
# Merge


def merge_local_predictions(
    observed: GridMap,
    clusters: list[FrontierCluster],
    locals_: list[GridMap],
) -> PredictedMap:
    """Fold per-frontier predictions into one map.

    Observed cells always win.  A cell Unknown in the observed map takes
    a predicted value when some local prediction knows it; where windows
    overlap, the prediction later in cluster order has the last word.
    """
    if len(clusters) != len(locals_):
        raise AlignmentError(f"{len(clusters)} clusters but {len(locals_)} local predictions")
    merged = observed.cells.copy()
    unknown = observed.cells == int(CellState.UNKNOWN)
    prov = np.where(
        unknown, int(Provenance.UNKNOWN), int(Provenance.OBSERVED)
    ).astype(np.uint8)
    h, w = merged.shape
    for cluster, local in zip(clusters, locals_):
        lh, lw_ = local.cells.shape
        if lh != lw_ or lh % 2 != 0:
            raise AlignmentError(f"local prediction of shape {(lh, lw_)} is not an even square")
        half = lh // 2
        rep = cluster.representative
        r0, c0 = rep.row - half, rep.col - half
        sr0, sr1 = max(r0, 0), min(r0 + lh, h)
        sc0, sc1 = max(c0, 0), min(c0 + lh, w)
        if sr0 >= sr1 or sc0 >= sc1:
            continue
        sub = local.cells[sr0 - r0 : sr1 - r0, sc0 - c0 : sc1 - c0]
        region = (slice(sr0, sr1), slice(sc0, sc1))
        take = unknown[region] & (sub != int(CellState.UNKNOWN))
        merged[region][take] = sub[take]
        prov[region][take] = int(Provenance.PREDICTED)
    return PredictedMap(GridMap(merged, observed.resolution, observed.origin), prov)


# ---------------------------------------------------------------------------
# Framing


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
    """Parse one complete frame; returns (msg_type, payload).

    Grid frames yield a (height, width) uint8 array, error frames the
    decoded message.  Anything malformed raises ProtocolError.
    """
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


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            raise ProtocolError(f"connection closed mid-frame ({got} of {n} bytes)")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _read_frame(sock: socket.socket) -> tuple[int, np.ndarray | str]:
    head = _recv_exact(sock, 5)
    if head[:4] != MAGIC:
        raise ProtocolError(f"bad magic {head[:4]!r}")
    kind = head[4]
    if kind == MSG_ERROR:
        (length,) = struct.unpack(">H", _recv_exact(sock, 2))
        body = _recv_exact(sock, length) if length else b""
        return decode_frame(head + struct.pack(">H", length) + body)
    if kind in (MSG_REQUEST, MSG_RESPONSE):
        dims = _recv_exact(sock, 4)
        w, h = struct.unpack(">HH", dims)
        if w == 0 or h == 0:
            raise ProtocolError(f"zero-sized grid {w}x{h}")
        body = _recv_exact(sock, w * h)
        return decode_frame(head + dims + body)
    raise ProtocolError(f"unknown message type 0x{kind:02x}")


# ---------------------------------------------------------------------------
# Echo server, for protocol checks without a real model


class _EchoHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        while True:
            try:
                kind, payload = _read_frame(self.request)
            except ProtocolError as e:
                if "closed mid-frame (0 of" in str(e):
                    return  # clean disconnect between frames
                try:
                    self.request.sendall(encode_error(str(e)))
                finally:
                    return
            if kind != MSG_REQUEST:
                self.request.sendall(encode_error(f"expected a request, got type 0x{kind:02x}"))
                return
            self.request.sendall(encode_response(payload))


class EchoServer(socketserver.ThreadingTCPServer):
    """Loopback predictor: every request is answered with its own payload.

    Thresholding an echoed tri-state window is the identity, so running
    against this server is behaviorally the Null predictor.  Used by the
    predictor-check command and by protocol tests.
    """

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _EchoHandler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "EchoServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "EchoServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
