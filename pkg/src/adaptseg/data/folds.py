"""Cross-validation fold assignment and JSON (de)serialization."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cases import Case, DataError, FoldSplit


def make_folds(cases: list[Case] | list[str], k: int, seed: int) -> FoldSplit:
    """Shuffle case ids with ``seed`` and deal them round-robin into k folds."""
    ids = [c.id if isinstance(c, Case) else str(c) for c in cases]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate case ids in fold input")
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if k > len(ids):
        raise DataError(f"k={k} exceeds number of cases ({len(ids)})")
    order = np.random.default_rng(seed).permutation(sorted(ids))
    split = FoldSplit(k=k, assignments={cid: i % k for i, cid in enumerate(order)})
    split.validate()
    return split


def save_folds(split: FoldSplit, path: str | Path) -> None:
    Path(path).write_text(json.dumps(split.assignments, indent=1, sort_keys=True))


def load_folds(path: str | Path) -> FoldSplit:
    assignments = {str(k): int(v) for k, v in json.loads(Path(path).read_text()).items()}
    if not assignments:
        raise DataError(f"{path}: empty fold file")
    split = FoldSplit(k=max(assignments.values()) + 1, assignments=assignments)
    split.validate()
    return split
