"""Patch sampling and batch streams.

Two streams feed training: a supervised stream over labeled cases and a
domain-balanced stream that pairs labeled source items with unlabeled target
items in every batch. Both are infinite generators; epoch boundaries are a
trainer concern (see epoch_length).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cases import Case, DataError
from .synthetic import ConfigError

N_REGIONS = 3  # matches eval.regions.REGION_NAMES


def _region_stack(label_patch: np.ndarray) -> np.ndarray:
    # Imported lazily: eval pulls in the training package, which imports this
    # module, so a top-level import would be circular.
    from ..eval.regions import compose_region_stack

    return compose_region_stack(label_patch)


@dataclass
class Batch:
    """One training batch.

    source_mask marks items whose segmentation targets are attached and enter
    the supervised loss; rows where it is False have all-zero seg_targets.
    In balanced mode it coincides with "is source domain"; in supervised mode
    every item carries targets regardless of domain.
    """

    patches: np.ndarray  # (B, C, *patch) float32
    seg_targets: np.ndarray  # (B, N_REGIONS, *patch) float32
    domain_onehot: np.ndarray  # (B, 2) float32
    source_mask: np.ndarray  # (B,) bool
    case_ids: list[str]


def epoch_length(n_source: int, n_target: int, batch_size: int) -> int:
    """Batches per epoch: the larger domain seen about once per epoch."""
    return math.ceil(max(n_source, n_target) * 2 / batch_size)


def _crop_padded(array: np.ndarray, start: np.ndarray, size: tuple[int, int, int]) -> np.ndarray:
    """Crop the trailing 3 axes at ``start`` (may be out of range); zero-pad."""
    lead = array.shape[:-3]
    out = np.zeros(lead + tuple(size), dtype=array.dtype)
    src, dst = [], []
    for ax in range(3):
        dim = array.shape[len(lead) + ax]
        s0 = int(start[ax])
        lo, hi = max(s0, 0), min(s0 + size[ax], dim)
        if lo >= hi:
            return out
        src.append(slice(lo, hi))
        dst.append(slice(lo - s0, hi - s0))
    out[(..., *dst)] = array[(..., *src)]
    return out


def sample_patch(
    case: Case,
    patch_size: tuple[int, int, int],
    rng: np.random.Generator,
    foreground_bias: float,
    with_target: bool = True,
    foreground_indices: np.ndarray | None = None,
):
    """Draw one patch; returns (patch, label_patch or None).

    With probability ``foreground_bias`` (when labels exist and contain any
    foreground) the patch is centered on a foreground voxel; otherwise the
    start corner is uniform over in-bounds positions. Centered patches may
    overhang the volume and are zero-padded. ``with_target=False`` skips every
    label access, for cases whose annotations must stay unread.
    """
    if not 0.0 <= foreground_bias <= 1.0:
        raise ConfigError(f"foreground_bias must be in [0,1], got {foreground_bias}")
    dims = case.spatial_shape
    size = tuple(int(p) for p in patch_size)

    use_labels = with_target and case.labels is not None
    center = None
    if use_labels and foreground_bias > 0.0:
        if foreground_indices is None:
            foreground_indices = np.flatnonzero(case.labels.grid)
        if foreground_indices.size and rng.random() < foreground_bias:
            flat = foreground_indices[rng.integers(foreground_indices.size)]
            center = np.array(np.unravel_index(flat, dims))

    if center is not None:
        start = center - np.array(size) // 2
    else:
        start = np.array(
            [rng.integers(0, max(d - s, 0) + 1) for d, s in zip(dims, size)]
        )

    patch = _crop_padded(case.volume, start, size).astype(np.float32)
    target = _crop_padded(case.labels.grid, start, size) if use_labels else None
    return patch, target


class _CaseCycler:
    """Deterministic case picker: permutation-cycled or with-replacement."""

    def __init__(self, cases: list[Case], rng: np.random.Generator, replacement: bool):
        self.cases = cases
        self.rng = rng
        self.replacement = replacement
        self._order: list[int] = []

    def next(self) -> Case:
        if self.replacement:
            return self.cases[int(self.rng.integers(len(self.cases)))]
        if not self._order:
            self._order = list(self.rng.permutation(len(self.cases)))
        return self.cases[self._order.pop(0)]


def _zero_targets(size) -> np.ndarray:
    return np.zeros((N_REGIONS, *size), dtype=np.float32)


def balanced_batch_stream(
    source: list[Case],
    target: list[Case],
    batch_size: int,
    rng: np.random.Generator,
    patch_size: tuple[int, int, int] = (24, 24, 24),
    foreground_bias: float = 0.33,
) -> Iterator[Batch]:
    """Infinite stream of half-source/half-target batches.

    Source items carry segmentation targets; target items are sampled without
    any label access (uniform crops, zero target rows). Each domain draws from
    its own spawned RNG substream, so the source-side randomness is unchanged
    by the presence of the target side. The domain whose size equals
    max(|source|,|target|) is permutation-cycled; the other is resampled with
    replacement.
    """
    if batch_size % 2 != 0:
        raise ConfigError(f"balanced mode needs an even batch_size, got {batch_size}")
    if not source or not target:
        raise DataError("balanced_batch_stream needs non-empty source and target lists")
    return _balanced_batches(source, target, batch_size, rng, patch_size, foreground_bias)


def _balanced_batches(source, target, batch_size, rng, patch_size, foreground_bias):
    rng_src, rng_tgt = rng.spawn(2)
    larger = max(len(source), len(target))
    src_pick = _CaseCycler(source, rng_src, replacement=len(source) < larger)
    tgt_pick = _CaseCycler(target, rng_tgt, replacement=len(target) < larger)
    half = batch_size // 2
    size = tuple(int(p) for p in patch_size)
    fg_cache: dict[str, np.ndarray] = {}

    while True:
        patches, targets, onehots, mask, ids = [], [], [], [], []
        for _ in range(half):
            case = src_pick.next()
            if case.id not in fg_cache and case.labels is not None:
                fg_cache[case.id] = np.flatnonzero(case.labels.grid)
            patch, label_patch = sample_patch(
                case, size, rng_src, foreground_bias, foreground_indices=fg_cache.get(case.id)
            )
            patches.append(patch)
            targets.append(
                _region_stack(label_patch) if label_patch is not None else _zero_targets(size)
            )
            onehots.append(case.domain.one_hot())
            mask.append(label_patch is not None)
            ids.append(case.id)
        for _ in range(half):
            case = tgt_pick.next()
            patch, _ = sample_patch(case, size, rng_tgt, 0.0, with_target=False)
            patches.append(patch)
            targets.append(_zero_targets(size))
            onehots.append(case.domain.one_hot())
            mask.append(False)
            ids.append(case.id)
        yield Batch(
            patches=np.stack(patches),
            seg_targets=np.stack(targets),
            domain_onehot=np.stack(onehots),
            source_mask=np.array(mask, dtype=bool),
            case_ids=ids,
        )


def supervised_batch_stream(
    cases: list[Case],
    batch_size: int,
    rng: np.random.Generator,
    patch_size: tuple[int, int, int] = (24, 24, 24),
    foreground_bias: float = 0.33,
) -> Iterator[Batch]:
    """Infinite stream over labeled cases; every item carries targets."""
    if not cases:
        raise DataError("supervised_batch_stream needs a non-empty case list")
    missing = [c.id for c in cases if c.labels is None]
    if missing:
        raise DataError(f"supervised training requires labels; missing for {missing}")
    return _supervised_batches(cases, batch_size, rng, patch_size, foreground_bias)


def _supervised_batches(cases, batch_size, rng, patch_size, foreground_bias):
    pick = _CaseCycler(cases, rng, replacement=False)
    size = tuple(int(p) for p in patch_size)
    fg_cache: dict[str, np.ndarray] = {}

    while True:
        patches, targets, onehots, ids = [], [], [], []
        for _ in range(batch_size):
            case = pick.next()
            if case.id not in fg_cache:
                fg_cache[case.id] = np.flatnonzero(case.labels.grid)
            patch, label_patch = sample_patch(
                case, size, rng, foreground_bias, foreground_indices=fg_cache[case.id]
            )
            patches.append(patch)
            targets.append(_region_stack(label_patch))
            onehots.append(case.domain.one_hot())
            ids.append(case.id)
        yield Batch(
            patches=np.stack(patches),
            seg_targets=np.stack(targets),
            domain_onehot=np.stack(onehots),
            source_mask=np.ones(batch_size, dtype=bool),
            case_ids=ids,
        )
