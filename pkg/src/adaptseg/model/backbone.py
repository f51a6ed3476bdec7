"""Configurable encoder-decoder segmentation backbone.

Encoder stages are two 3x3x3 convolutions (instance norm + leaky ReLU) with
max-pool downsampling between stages; the decoder mirrors them with
transposed-conv upsampling and skip concatenation. A 1x1x1 projection maps
the full-resolution features to one logit channel per overlapping region.
The deepest encoder feature map (bottleneck) is exposed for the domain
classifier tap. With deep supervision enabled, every upsampled decoder scale
except full resolution gets an auxiliary projection head, so a network with
n stages yields n-1 segmentation outputs (1 full-res + n-2 auxiliary).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

MAX_CHANNELS = 320


class ShapeError(ValueError):
    """Input spatial shape incompatible with the network topology."""


@dataclass
class BackboneConfig:
    spatial_dims: int = 3
    n_stages: int = 4
    base_channels: int = 16
    channel_growth: float = 2.0
    seg_out_channels: int = 3
    in_channels: int = 4
    deep_supervision: bool = False
    grl_tap: str = "bottleneck"

    def validate(self) -> None:
        if self.spatial_dims not in (2, 3):
            raise ValueError(f"spatial_dims must be 2 or 3, got {self.spatial_dims}")
        if self.n_stages < 2:
            raise ValueError(f"n_stages must be >= 2, got {self.n_stages}")
        if self.base_channels < 1:
            raise ValueError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.channel_growth <= 0:
            raise ValueError(f"channel_growth must be > 0, got {self.channel_growth}")
        if self.grl_tap != "bottleneck":
            raise ValueError(f"unsupported grl_tap '{self.grl_tap}'")

    def stage_channels(self) -> list[int]:
        return [
            min(round(self.base_channels * self.channel_growth**i), MAX_CHANNELS)
            for i in range(self.n_stages)
        ]


def _layers(spatial_dims: int):
    if spatial_dims == 2:
        return nn.Conv2d, nn.ConvTranspose2d, nn.InstanceNorm2d, nn.MaxPool2d
    return nn.Conv3d, nn.ConvTranspose3d, nn.InstanceNorm3d, nn.MaxPool3d


class DoubleConv(nn.Module):
    """Two conv -> instance norm -> leaky ReLU units."""

    def __init__(self, spatial_dims: int, in_ch: int, out_ch: int):
        super().__init__()
        conv, _, norm, _ = _layers(spatial_dims)
        self.block = nn.Sequential(
            conv(in_ch, out_ch, kernel_size=3, padding=1),
            norm(out_ch, affine=True),
            nn.LeakyReLU(0.01, inplace=True),
            conv(out_ch, out_ch, kernel_size=3, padding=1),
            norm(out_ch, affine=True),
            nn.LeakyReLU(0.01, inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class SegmentationBackbone(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        ch = cfg.stage_channels()
        n = cfg.n_stages
        conv, upconv, _, pool = _layers(cfg.spatial_dims)

        self.stages = nn.ModuleList(
            DoubleConv(cfg.spatial_dims, cfg.in_channels if i == 0 else ch[i - 1], ch[i])
            for i in range(n)
        )
        self.pool = pool(kernel_size=2)
        # Decoder step j lifts level n-1-j up to level n-2-j.
        self.ups = nn.ModuleList(
            upconv(ch[n - 1 - j], ch[n - 2 - j], kernel_size=2, stride=2) for j in range(n - 1)
        )
        self.dec = nn.ModuleList(
            DoubleConv(cfg.spatial_dims, 2 * ch[n - 2 - j], ch[n - 2 - j]) for j in range(n - 1)
        )
        self.projection = conv(ch[0], cfg.seg_out_channels, kernel_size=1)
        if cfg.deep_supervision:
            # Aux head for every decoder level except full resolution,
            # aligned with decode order (coarsest first).
            self.aux_heads = nn.ModuleList(
                conv(ch[n - 2 - j], cfg.seg_out_channels, kernel_size=1) for j in range(n - 2)
            )
        else:
            self.aux_heads = nn.ModuleList()

    def _check_shape(self, x: torch.Tensor) -> None:
        dims = x.shape[2:]
        if len(dims) != self.cfg.spatial_dims:
            raise ShapeError(
                f"expected {self.cfg.spatial_dims} spatial dims, got input shape {tuple(x.shape)}"
            )
        factor = 2 ** (self.cfg.n_stages - 1)
        for d in dims:
            if d < factor:
                raise ShapeError(
                    f"spatial size {tuple(dims)} too small for {self.cfg.n_stages} stages "
                    f"(needs >= {factor} per axis)"
                )
            if d % factor:
                raise ShapeError(
                    f"spatial size {tuple(dims)} not divisible by {factor} "
                    f"(required for {self.cfg.n_stages}-stage down/upsampling)"
                )

    def forward(self, x: torch.Tensor):
        """Returns (seg_logits, aux_logits, bottleneck).

        aux_logits is ordered finest to coarsest and empty unless deep
        supervision is configured.
        """
        self._check_shape(x)
        skips = []
        h = x
        for i, stage in enumerate(self.stages):
            if i:
                h = self.pool(h)
            h = stage(h)
            skips.append(h)

        bottleneck = skips[-1]
        aux = []
        h = bottleneck
        n = self.cfg.n_stages
        for j, (up, dec) in enumerate(zip(self.ups, self.dec)):
            h = up(h)
            h = dec(torch.cat([skips[n - 2 - j], h], dim=1))
            if self.cfg.deep_supervision and j < n - 2:
                aux.append(self.aux_heads[j](h))
        aux.reverse()
        return self.projection(h), aux, bottleneck

    @property
    def bottleneck_channels(self) -> int:
        return self.cfg.stage_channels()[-1]


def build_backbone(cfg: BackboneConfig) -> SegmentationBackbone:
    return SegmentationBackbone(cfg)


def parameter_groups(model: SegmentationBackbone) -> dict[str, list[str]]:
    """Named parameter groups used by the transfer-learning strategies.

    encoder: all encoder stages except the deepest; bottleneck: the deepest
    stage; decoder_last: the full-resolution decoder step; decoder_trunk:
    every other decoder step plus auxiliary heads; projection: the final
    1x1x1 output convolution.
    """
    n = model.cfg.n_stages
    groups: dict[str, list[str]] = {
        "encoder": [],
        "bottleneck": [],
        "decoder_trunk": [],
        "decoder_last": [],
        "projection": [],
    }
    for name, _ in model.named_parameters():
        parts = name.split(".")
        if parts[0] == "stages":
            idx = int(parts[1])
            groups["bottleneck" if idx == n - 1 else "encoder"].append(name)
        elif parts[0] in ("ups", "dec"):
            idx = int(parts[1])
            groups["decoder_last" if idx == n - 2 else "decoder_trunk"].append(name)
        elif parts[0] == "aux_heads":
            groups["decoder_trunk"].append(name)
        elif parts[0] == "projection":
            groups["projection"].append(name)
        else:
            raise ValueError(f"parameter '{name}' not covered by any group")
    return groups
