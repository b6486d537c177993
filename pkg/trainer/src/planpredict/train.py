"""Training loops for the denoiser and the completer.

Both stages minimize the L1 distance to their target window with Adam at
learning rate 0.0005, for up to cfg.epochs passes.  Validation L1 is
measured once before any update (the epoch-0 reference) and after every
epoch; the checkpoint keeps whichever weights scored best on validation.
An optional target_drop stops training early once validation L1 has
fallen by that fraction from the epoch-0 value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader

from .data import DatasetError, WindowPairs, load_index, split_by_scene
from .models import build

MIN_TRIPLETS = 100


@dataclass
class TrainConfig:
    dataset: str
    out: str = "checkpoints"
    epochs: int = 30
    batch_size: int = 16
    lr: float = 0.0005
    seed: int = 0
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)
    target_drop: float | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.epochs > 300:
            raise ValueError(f"epochs must be in 1..300, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.target_drop is not None and not 0.0 < self.target_drop < 1.0:
            raise ValueError(f"target_drop must be in (0,1), got {self.target_drop}")


@dataclass
class TrainResult:
    checkpoint: Path
    epoch0_val: float
    best_val: float
    best_epoch: int
    history: list[tuple[int, float, float]] = field(default_factory=list)  # epoch, train, val

    @property
    def drop(self) -> float:
        return 1.0 - self.best_val / self.epoch0_val


def _loaders(cfg: TrainConfig, stage: str) -> tuple[DataLoader, DataLoader]:
    records = load_index(cfg.dataset)
    if len(records) < MIN_TRIPLETS:
        raise DatasetError(f"{len(records)} triplets is below the {MIN_TRIPLETS} minimum")
    splits = split_by_scene(records, cfg.fractions, cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    train = DataLoader(
        WindowPairs(splits["train"], stage),
        batch_size=cfg.batch_size,
        shuffle=True,
        generator=gen,
    )
    val = DataLoader(WindowPairs(splits["val"], stage), batch_size=cfg.batch_size)
    return train, val


@torch.no_grad()
def _validate(model: nn.Module, loader: DataLoader) -> float:
    model.eval()
    loss = nn.L1Loss(reduction="sum")
    total, count = 0.0, 0
    for x, y in loader:
        total += loss(model(x), y).item()
        count += y.numel()
    return total / count


def _train(cfg: TrainConfig, stage: str, net_name: str) -> TrainResult:
    torch.manual_seed(cfg.seed)
    train_loader, val_loader = _loaders(cfg, stage)
    model = build(net_name)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    criterion = nn.L1Loss()

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / f"{net_name}.pt"

    epoch0 = _validate(model, val_loader)
    best_val, best_epoch = epoch0, 0
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    history: list[tuple[int, float, float]] = [(0, float("nan"), epoch0)]
    print(f"{net_name}: epoch 0 val L1 {epoch0:.4f}")

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        running, batches = 0.0, 0
        for x, y in train_loader:
            optimizer.zero_grad()
            loss = criterion(model(x), y)
            loss.backward()
            optimizer.step()
            running += loss.item()
            batches += 1
        val = _validate(model, val_loader)
        history.append((epoch, running / batches, val))
        print(f"{net_name}: epoch {epoch} train L1 {running / batches:.4f} val L1 {val:.4f}")
        if val < best_val:
            best_val, best_epoch = val, epoch
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
        if cfg.target_drop is not None and best_val <= epoch0 * (1.0 - cfg.target_drop):
            break

    torch.save(
        {
            "net": net_name,
            "state_dict": best_state,
            "epoch0_val": epoch0,
            "best_val": best_val,
            "best_epoch": best_epoch,
            "history": history,
            "seed": cfg.seed,
        },
        ckpt_path,
    )
    return TrainResult(ckpt_path, epoch0, best_val, best_epoch, history)


def train_denoiser(cfg: TrainConfig) -> TrainResult:
    """Learn observed-window -> clean-plan-on-observed-footprint."""
    return _train(cfg, "denoise", "denoiser")


def train_completer(cfg: TrainConfig) -> TrainResult:
    """Learn denoised-window -> fully-known-plan-window."""
    return _train(cfg, "complete", "completer")


def load_net(ckpt_path: str | Path) -> nn.Module:
    payload = torch.load(ckpt_path, map_location="cpu", weights_only=True)
    model = build(payload["net"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
