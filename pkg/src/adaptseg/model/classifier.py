"""Domain classifier head fed by the gradient-reversed bottleneck features."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .backbone import DoubleConv, ShapeError, _layers

N_DOMAINS = 2


@dataclass
class ClassifierConfig:
    n_blocks: int = 4
    conv_channels: int = 100
    fc_width: int = 100

    def validate(self) -> None:
        if self.n_blocks < 1:
            raise ValueError(f"n_blocks must be >= 1, got {self.n_blocks}")
        if self.conv_channels < 1:
            raise ValueError(f"conv_channels must be >= 1, got {self.conv_channels}")
        if self.fc_width < 1:
            raise ValueError(f"fc_width must be >= 1, got {self.fc_width}")


class DomainClassifier(nn.Module):
    """n_blocks x (double conv + max pool), global average pool, FC, 2 logits."""

    def __init__(self, in_channels: int, cfg: ClassifierConfig, spatial_dims: int = 3):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        _, _, _, pool = _layers(spatial_dims)
        blocks = []
        ch_in = in_channels
        for _ in range(cfg.n_blocks):
            blocks.append(DoubleConv(spatial_dims, ch_in, cfg.conv_channels))
            blocks.append(pool(kernel_size=2))
            ch_in = cfg.conv_channels
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Sequential(
            nn.Linear(cfg.conv_channels, cfg.fc_width),
            nn.LeakyReLU(0.01, inplace=True),
            nn.Linear(cfg.fc_width, N_DOMAINS),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        needed = 2**self.cfg.n_blocks
        if any(d < needed for d in x.shape[2:]):
            raise ShapeError(
                f"classifier input spatial size {tuple(x.shape[2:])} too small for "
                f"{self.cfg.n_blocks} pooling blocks (needs >= {needed} per axis)"
            )
        h = self.blocks(x)
        h = h.mean(dim=tuple(range(2, h.ndim)))  # global average pool
        return self.head(h)


def build_classifier(in_channels: int, cfg: ClassifierConfig, spatial_dims: int = 3) -> DomainClassifier:
    return DomainClassifier(in_channels, cfg, spatial_dims)


def classifier_parameter_count(in_channels: int, cfg: ClassifierConfig, spatial_dims: int = 3) -> int:
    """Closed-form parameter count (kernel 3 convs with bias + affine norms)."""
    k = 3**spatial_dims
    cc = cfg.conv_channels
    total = 0
    ch_in = in_channels
    for _ in range(cfg.n_blocks):
        total += ch_in * cc * k + cc  # first conv
        total += 2 * cc  # instance norm affine
        total += cc * cc * k + cc  # second conv
        total += 2 * cc
        ch_in = cc
    total += cc * cfg.fc_width + cfg.fc_width
    total += cfg.fc_width * N_DOMAINS + N_DOMAINS
    return total
