"""Intensity preprocessing."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .cases import Case, DataError


def zscore_normalize(case: Case) -> Case:
    """Standardize each channel over its nonzero voxels; zeros stay zero.

    Statistics are computed in float64 with population variance (ddof=0).
    """
    out = np.zeros_like(case.volume, dtype=np.float32)
    for c in range(case.volume.shape[0]):
        chan = case.volume[c]
        mask = chan != 0
        if not mask.any():
            raise DataError(f"case {case.id}: channel {c} is all zero, cannot standardize")
        vals = chan[mask].astype(np.float64)
        mean = vals.mean()
        std = vals.std()
        if std == 0.0:
            raise DataError(f"case {case.id}: channel {c} is constant over its nonzero voxels")
        out[c][mask] = ((vals - mean) / std).astype(np.float32)
    return replace(case, volume=out)
