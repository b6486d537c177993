"""Minimal binary PGM (P5) reader/writer.

The simulator snapshots maps as P5 files with an optional comment line
carrying geometry we do not need here; cell values are raw bytes
(Occupied 0, Unknown 100, Free 255 in the tri-state files).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    # magic, width, height, maxval; '#' comments run to end of line
    while len(fields) < 4:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        if data[pos : pos + 1].isspace():
            pos += 1
        elif data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            fields.append(data[pos:end])
            pos = end
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {fields[0]!r})")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    pos += 1  # single whitespace byte separates header from raster
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValueError(f"{path}: raster is {len(raster)} bytes, header says {width * height}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(cells: np.ndarray, path: str | Path) -> None:
    cells = np.ascontiguousarray(cells, dtype=np.uint8)
    h, w = cells.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(cells.tobytes())
