"""Training losses: masked segmentation loss, domain loss, weighted total.

The segmentation term combines a batch-aggregated soft Dice loss ("pseudo"
Dice: sums run jointly over every supervised item in the batch, per region
channel) with voxel-wise binary cross-entropy, both restricted to items whose
source_mask is set. The domain term is softmax cross-entropy over all items.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

DICE_EPS = 1e-5


@dataclass
class LossWeights:
    """Weight of the domain term in the total loss."""

    domain_weight: float = 0.01

    def validate(self) -> None:
        if self.domain_weight < 0:
            raise ValueError(f"domain_weight must be >= 0, got {self.domain_weight}")


@dataclass
class LossBreakdown:
    """Recorded loss values; l_total is recomputed from the recorded parts in
    float64 so the decomposition identity holds exactly."""

    l_seg: float
    l_d: float
    l_total: float

    @classmethod
    def combine(cls, l_seg: float, l_d: float, weights: LossWeights) -> "LossBreakdown":
        l_seg = float(l_seg)
        l_d = float(l_d)
        return cls(l_seg=l_seg, l_d=l_d, l_total=l_seg + weights.domain_weight * l_d)

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l_seg, self.l_d, self.l_total))


def seg_loss(
    seg_logits: torch.Tensor,
    region_targets: torch.Tensor,
    source_mask: torch.Tensor,
    eps: float = DICE_EPS,
) -> torch.Tensor:
    """Soft Dice + BCE over the supervised items only.

    seg_logits/region_targets: (B, R, *spatial); source_mask: (B,) bool.
    Dice sums aggregate over all supervised items jointly per region channel,
    then average over channels. Items with source_mask False contribute
    nothing, so their payloads cannot influence the value.
    """
    if not bool(source_mask.any()):
        raise ValueError("seg_loss: no supervised items in batch (source_mask all false)")
    logits = seg_logits[source_mask]
    targets = region_targets[source_mask]

    probs = torch.sigmoid(logits)
    axes = (0, *range(2, logits.ndim))  # aggregate over items and voxels
    intersect = (probs * targets).sum(dim=axes)
    denom = probs.sum(dim=axes) + targets.sum(dim=axes)
    dice = (2.0 * intersect + eps) / (denom + eps)
    dice_loss = (1.0 - dice).mean()

    bce = F.binary_cross_entropy_with_logits(logits, targets)
    return dice_loss + bce


def deep_supervision_weights(n_outputs: int) -> list[float]:
    """Per-scale weights: halved at each coarser scale, normalized to sum 1."""
    if n_outputs < 1:
        raise ValueError("need at least one output")
    raw = [0.5**k for k in range(n_outputs)]
    total = sum(raw)
    return [w / total for w in raw]


def _downsample_targets(targets: torch.Tensor, factor: int) -> torch.Tensor:
    """Region-mask targets at a coarser scale: a cell is foreground if any of
    the voxels it covers is (max pooling)."""
    if factor == 1:
        return targets
    if targets.ndim == 5:
        return F.max_pool3d(targets, kernel_size=factor)
    return F.max_pool2d(targets, kernel_size=factor)


def deep_supervised_seg_loss(
    outputs: list[torch.Tensor],
    region_targets: torch.Tensor,
    source_mask: torch.Tensor,
    eps: float = DICE_EPS,
) -> torch.Tensor:
    """Weighted seg_loss over multi-scale outputs (finest first)."""
    weights = deep_supervision_weights(len(outputs))
    total = None
    for k, (out, w) in enumerate(zip(outputs, weights)):
        tgt = _downsample_targets(region_targets, 2**k)
        term = w * seg_loss(out, tgt, source_mask, eps)
        total = term if total is None else total + term
    return total


def domain_loss(domain_logits: torch.Tensor, domain_onehot: torch.Tensor) -> torch.Tensor:
    """Mean softmax cross-entropy against one-hot domain labels."""
    log_probs = F.log_softmax(domain_logits, dim=1)
    return -(domain_onehot * log_probs).sum(dim=1).mean()


def domain_accuracy(domain_logits: torch.Tensor, domain_onehot: torch.Tensor) -> float:
    pred = domain_logits.argmax(dim=1)
    true = domain_onehot.argmax(dim=1)
    return float((pred == true).float().mean())


def total_loss(l_seg: float, l_d: float, weights: LossWeights) -> LossBreakdown:
    """Combine recorded scalar losses; the identity l_total = l_seg +
    domain_weight * l_d holds exactly by construction."""
    weights.validate()
    return LossBreakdown.combine(l_seg, l_d, weights)
