"""U-Net post-processor: 5x5 convolutions, 4 max-pool levels, 64x64 in/out.

Two variants share the topology: the plain network outputs the image
directly; the residual variant adds the network output to its input, so a
zeroed correction branch is exactly the identity map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn


@dataclass(frozen=True)
class NetworkSpec:
    kernel_size: int = 5
    pool_levels: int = 4
    base_channels: int = 32  # doubled at each pool level
    residual_skip: bool = False  # True for the minimal-prior (ellipse) variant
    upsample: str = "bilinear"  # "bilinear" | "transpose"
    image_size: int = 64

    def channels(self) -> list[int]:
        return [self.base_channels * 2**i for i in range(self.pool_levels + 1)]

    def to_dict(self) -> dict:
        return {
            "kernel_size": self.kernel_size,
            "pool_levels": self.pool_levels,
            "base_channels": self.base_channels,
            "residual_skip": self.residual_skip,
            "upsample": self.upsample,
            "image_size": self.image_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(**d)


def _double_conv(cin: int, cout: int, k: int) -> nn.Sequential:
    pad = k // 2
    return nn.Sequential(
        nn.Conv2d(cin, cout, k, padding=pad),
        nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, k, padding=pad),
        nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        k = spec.kernel_size
        ch = spec.channels()
        self.encoders = nn.ModuleList()
        cin = 1
        for c in ch:
            self.encoders.append(_double_conv(cin, c, k))
            cin = c
        self.pool = nn.MaxPool2d(2)
        self.upsamplers = nn.ModuleList()
        self.decoders = nn.ModuleList()
        for level in range(spec.pool_levels - 1, -1, -1):
            c_deep, c_skip = ch[level + 1], ch[level]
            if spec.upsample == "transpose":
                self.upsamplers.append(nn.ConvTranspose2d(c_deep, c_skip, 2, stride=2))
            else:
                self.upsamplers.append(
                    nn.Sequential(
                        nn.Upsample(scale_factor=2, mode="bilinear", align_corners=False),
                        nn.Conv2d(c_deep, c_skip, 1),
                    )
                )
            self.decoders.append(_double_conv(2 * c_skip, c_skip, k))
        self.head = nn.Conv2d(ch[0], 1, 1)

    def correction(self, x: torch.Tensor) -> torch.Tensor:
        """The network branch alone (what the residual variant adds to x)."""
        if x.shape[-1] != self.spec.image_size or x.shape[-2] != self.spec.image_size:
            raise ValueError(f"expected {self.spec.image_size}x{self.spec.image_size} input")
        skips = []
        h = x
        for enc in self.encoders[:-1]:
            h = enc(h)
            skips.append(h)
            h = self.pool(h)
        h = self.encoders[-1](h)
        for up, dec, skip in zip(self.upsamplers, self.decoders, reversed(skips)):
            h = up(h)
            h = dec(torch.cat([skip, h], dim=1))
        return self.head(h)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.correction(x)
        if self.spec.residual_skip:
            out = x + out
        return out

    def zero_correction_branch(self) -> None:
        """Zero every weight so the residual variant computes the identity."""
        with torch.no_grad():
            for p in self.parameters():
                p.zero_()
