"""The two toy networks: a nested-skip denoiser and a U-shaped completer.

Both take one 120x120 channel in [-1,1] and emit the same shape through a
tanh head.  Encoder widths are 16, 32, 64, 128, 256.  Internally the
window is padded to 128x128 (with the Unknown value, not zero) so four
halvings stay exact, then cropped back.

The denoiser carries dense nested skip paths: every decoder node at a
scale sees all earlier nodes at that scale plus an upsample from below.
Nodes are single conv blocks to keep CPU training affordable.  The
completer is a plain U shape with double conv blocks.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .data import UNKNOWN_T

WIDTHS = (16, 32, 64, 128, 256)
WINDOW = 120
_PADDED = 128
_PAD = (_PADDED - WINDOW) // 2


def _block(cin: int, cout: int, convs: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(convs):
        layers += [
            nn.Conv2d(cin if i == 0 else cout, cout, 3, padding=1),
            nn.GroupNorm(4, cout),
            nn.ReLU(inplace=True),
        ]
    return nn.Sequential(*layers)


def _pad(x: torch.Tensor) -> torch.Tensor:
    if x.shape[-1] == _PADDED and x.shape[-2] == _PADDED:
        return x
    return F.pad(x, (_PAD, _PAD, _PAD, _PAD), value=UNKNOWN_T)


def _crop(x: torch.Tensor) -> torch.Tensor:
    return x[..., _PAD : _PAD + WINDOW, _PAD : _PAD + WINDOW]


class Denoiser(nn.Module):
    def __init__(self) -> None:
        super().__init__()
        w = WIDTHS
        self.pool = nn.MaxPool2d(2)
        self.up = nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False)
        # backbone column
        self.b0 = _block(1, w[0], 1)
        self.b1 = _block(w[0], w[1], 1)
        self.b2 = _block(w[1], w[2], 1)
        self.b3 = _block(w[2], w[3], 1)
        self.b4 = _block(w[3], w[4], 1)
        # nested nodes n{scale}{column}; inputs are all earlier nodes at
        # the scale plus the upsampled node one scale down, one column back
        self.n01 = _block(w[0] + w[1], w[0], 1)
        self.n11 = _block(w[1] + w[2], w[1], 1)
        self.n21 = _block(w[2] + w[3], w[2], 1)
        self.n31 = _block(w[3] + w[4], w[3], 1)
        self.n02 = _block(2 * w[0] + w[1], w[0], 1)
        self.n12 = _block(2 * w[1] + w[2], w[1], 1)
        self.n22 = _block(2 * w[2] + w[3], w[2], 1)
        self.n03 = _block(3 * w[0] + w[1], w[0], 1)
        self.n13 = _block(3 * w[1] + w[2], w[1], 1)
        self.n04 = _block(4 * w[0] + w[1], w[0], 1)
        self.head = nn.Conv2d(w[0], 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = _pad(x)
        x00 = self.b0(x)
        x10 = self.b1(self.pool(x00))
        x20 = self.b2(self.pool(x10))
        x30 = self.b3(self.pool(x20))
        x40 = self.b4(self.pool(x30))
        x01 = self.n01(torch.cat([x00, self.up(x10)], 1))
        x11 = self.n11(torch.cat([x10, self.up(x20)], 1))
        x21 = self.n21(torch.cat([x20, self.up(x30)], 1))
        x31 = self.n31(torch.cat([x30, self.up(x40)], 1))
        x02 = self.n02(torch.cat([x00, x01, self.up(x11)], 1))
        x12 = self.n12(torch.cat([x10, x11, self.up(x21)], 1))
        x22 = self.n22(torch.cat([x20, x21, self.up(x31)], 1))
        x03 = self.n03(torch.cat([x00, x01, x02, self.up(x12)], 1))
        x13 = self.n13(torch.cat([x10, x11, x12, self.up(x22)], 1))
        x04 = self.n04(torch.cat([x00, x01, x02, x03, self.up(x13)], 1))
        return _crop(torch.tanh(self.head(x04)))


class Completer(nn.Module):
    def __init__(self) -> None:
        super().__init__()
        w = WIDTHS
        self.pool = nn.MaxPool2d(2)
        self.up = nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False)
        self.e0 = _block(1, w[0], 2)
        self.e1 = _block(w[0], w[1], 2)
        self.e2 = _block(w[1], w[2], 2)
        self.e3 = _block(w[2], w[3], 2)
        self.mid = _block(w[3], w[4], 2)
        self.d3 = _block(w[4] + w[3], w[3], 2)
        self.d2 = _block(w[3] + w[2], w[2], 2)
        self.d1 = _block(w[2] + w[1], w[1], 2)
        self.d0 = _block(w[1] + w[0], w[0], 2)
        self.head = nn.Conv2d(w[0], 1, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = _pad(x)
        e0 = self.e0(x)
        e1 = self.e1(self.pool(e0))
        e2 = self.e2(self.pool(e1))
        e3 = self.e3(self.pool(e2))
        mid = self.mid(self.pool(e3))
        d3 = self.d3(torch.cat([self.up(mid), e3], 1))
        d2 = self.d2(torch.cat([self.up(d3), e2], 1))
        d1 = self.d1(torch.cat([self.up(d2), e1], 1))
        d0 = self.d0(torch.cat([self.up(d1), e0], 1))
        return _crop(torch.tanh(self.head(d0)))


def build(name: str) -> nn.Module:
    if name == "denoiser":
        return Denoiser()
    if name == "completer":
        return Completer()
    raise ValueError(f"unknown network {name!r}")
