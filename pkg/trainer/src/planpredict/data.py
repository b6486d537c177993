"""Dataset plumbing: triplet loading, scene-level splits, normalization.

The simulator's make-dataset command emits, per chosen frontier, three
PGM windows plus one index.jsonl line:

    x          observed tri-state window, clutter and all
    denoised   clean plan on x's observed footprint, Unknown elsewhere
    completed  clean plan everywhere in the window

The denoiser learns x -> denoised, the completer denoised -> completed.
Splits are by scene, never by window: windows of one building look alike,
so a window-level split would leak.

Bytes map to network space by t = b/127.5 - 1 (Occupied 0 -> -1, Free
255 -> +1, Unknown 100 -> about -0.216) and back by y = round((t+1)*127.5).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

from .pgmio import read_pgm

OCCUPIED = 0
UNKNOWN = 100
FREE = 255

# client-side thresholds: served bytes below 80 read as Occupied, above 120 as Free
OCC_BELOW = 80
FREE_ABOVE = 120

UNKNOWN_T = UNKNOWN / 127.5 - 1.0  # Unknown in network space


class DatasetError(RuntimeError):
    """The dataset is missing, too small, or leaves a split empty."""


def to_unit(cells: np.ndarray) -> np.ndarray:
    """Bytes [0,255] -> float32 [-1,1]."""
    return (np.asarray(cells, dtype=np.float32) / 127.5) - 1.0


def to_bytes(t: np.ndarray) -> np.ndarray:
    """Network output [-1,1] -> bytes, y = round((t+1)*127.5)."""
    y = np.rint((np.asarray(t, dtype=np.float32) + 1.0) * 127.5)
    return np.clip(y, 0, 255).astype(np.uint8)


def threshold(raw: np.ndarray) -> np.ndarray:
    """Collapse raw bytes to tri-state the way the simulator client does."""
    raw = np.asarray(raw, dtype=np.uint8)
    out = np.full_like(raw, UNKNOWN)
    out[raw < OCC_BELOW] = OCCUPIED
    out[raw > FREE_ABOVE] = FREE
    return out


def load_index(dataset_dir: str | Path) -> list[dict]:
    """Parse index.jsonl; paths in the records become absolute."""
    root = Path(dataset_dir)
    index = root / "index.jsonl"
    if not index.is_file():
        raise DatasetError(f"no index.jsonl under {root}")
    records = []
    for line in index.read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        for key in ("x", "denoised", "completed"):
            rec[key] = str(root / rec[key])
        records.append(rec)
    if not records:
        raise DatasetError(f"{index} is empty")
    return records


def split_by_scene(
    records: list[dict],
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15),
    seed: int = 0,
) -> dict[str, list[dict]]:
    """Partition records into train/val/test with whole scenes per side."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions {fractions} do not sum to 1")
    scenes = sorted({rec["scene"] for rec in records})
    if len(scenes) < 3:
        raise DatasetError(f"need at least 3 scenes to split, have {len(scenes)}")
    order = list(np.random.default_rng(seed).permutation(len(scenes)))
    n = len(scenes)
    n_val = max(1, int(n * fractions[1]))
    n_test = max(1, int(n * fractions[2]))
    val = {scenes[i] for i in order[:n_val]}
    test = {scenes[i] for i in order[n_val : n_val + n_test]}
    train = {scenes[i] for i in order[n_val + n_test :]}
    if not train:
        raise DatasetError(f"{n} scenes leave the training split empty")
    buckets = {"train": train, "val": val, "test": test}
    return {
        name: [rec for rec in records if rec["scene"] in members]
        for name, members in buckets.items()
    }


class WindowPairs(Dataset):
    """(input, target) window tensors for one of the two stages.

    stage "denoise" pairs x with denoised, stage "complete" pairs
    denoised with completed.  Windows are small, so everything is
    preloaded; items come out as (1, H, W) float32 in [-1, 1].
    """

    _STAGES = {"denoise": ("x", "denoised"), "complete": ("denoised", "completed")}

    def __init__(self, records: list[dict], stage: str):
        if stage not in self._STAGES:
            raise ValueError(f"stage must be one of {sorted(self._STAGES)}, got {stage!r}")
        if not records:
            raise DatasetError(f"no records for the {stage!r} stage")
        in_key, out_key = self._STAGES[stage]
        self.inputs = [read_pgm(rec[in_key]) for rec in records]
        self.targets = [read_pgm(rec[out_key]) for rec in records]

    def __len__(self) -> int:
        return len(self.inputs)

    def __getitem__(self, i: int) -> tuple[torch.Tensor, torch.Tensor]:
        x = torch.from_numpy(to_unit(self.inputs[i]))[None]
        y = torch.from_numpy(to_unit(self.targets[i]))[None]
        return x, y
