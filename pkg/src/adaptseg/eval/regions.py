"""Overlapping evaluation regions built from the exclusive label classes.

Three nested regions are scored and predicted: the whole lesion (all three
classes), the core (nonenhancing + enhancing) and the enhancing compartment
alone. Model outputs use one sigmoid channel per region in this fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.cases import LABEL_EDEMA, LABEL_ENHANCING, LABEL_NONENHANCING, LabelMap

REGION_NAMES = ("WT", "TC", "ET")
N_REGIONS = len(REGION_NAMES)


@dataclass
class RegionMasks:
    """Boolean masks for the three nested regions (same grid shape)."""

    wt: np.ndarray
    tc: np.ndarray
    et: np.ndarray

    def by_name(self, name: str) -> np.ndarray:
        return {"WT": self.wt, "TC": self.tc, "ET": self.et}[name]

    def stack(self) -> np.ndarray:
        return np.stack([self.wt, self.tc, self.et])

    def nested(self) -> bool:
        return bool(np.all(self.et <= self.tc) and np.all(self.tc <= self.wt))


def compose_regions(labels: LabelMap | np.ndarray) -> RegionMasks:
    """Map exclusive class labels to the three overlapping regions."""
    grid = labels.grid if isinstance(labels, LabelMap) else np.asarray(labels)
    et = grid == LABEL_ENHANCING
    tc = et | (grid == LABEL_NONENHANCING)
    wt = tc | (grid == LABEL_EDEMA)
    return RegionMasks(wt=wt, tc=tc, et=et)


def compose_region_stack(grid: np.ndarray) -> np.ndarray:
    """Region masks as a float32 (3, *spatial) stack, for training targets."""
    return compose_regions(LabelMap(grid=grid)).stack().astype(np.float32)


def repair_nesting(masks: RegionMasks) -> RegionMasks:
    """Force the containment chain ET ⊆ TC ⊆ WT on independent predictions.

    Outer regions absorb inner ones: TC gains every ET voxel, WT gains every
    TC voxel. Inner predictions are trusted as-is.
    """
    tc = masks.tc | masks.et
    wt = masks.wt | tc
    return RegionMasks(wt=wt, tc=tc, et=masks.et)


def binarize_prediction(region_probs: np.ndarray, threshold: float = 0.5) -> RegionMasks:
    """Threshold per-region sigmoid probabilities and repair nesting.

    ``region_probs`` has shape (3, *spatial) in REGION_NAMES order.
    """
    if region_probs.shape[0] != N_REGIONS:
        raise ValueError(f"expected {N_REGIONS} region channels, got {region_probs.shape[0]}")
    raw = RegionMasks(
        wt=region_probs[0] >= threshold,
        tc=region_probs[1] >= threshold,
        et=region_probs[2] >= threshold,
    )
    return repair_nesting(raw)
