"""Core dataset types: cases, label maps, domain tags, fold splits."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

# Canonical internal label codes. Readers remap external conventions
# (e.g. legacy code 4 for enhancing tissue) onto these.
LABEL_BACKGROUND = 0
LABEL_NONENHANCING = 1
LABEL_EDEMA = 2
LABEL_ENHANCING = 3

CANONICAL_LEGEND = {
    LABEL_BACKGROUND: "background",
    LABEL_NONENHANCING: "nonenhancing",
    LABEL_EDEMA: "edema",
    LABEL_ENHANCING: "enhancing",
}


class DataError(ValueError):
    """Fatal dataset problem (missing files, bad codes, shape mismatch)."""


class LabelAccessError(RuntimeError):
    """Raised when guarded labels are read in a label-free training mode."""


class DomainLabel(Enum):
    SOURCE = "source"
    TARGET = "target"

    @property
    def index(self) -> int:
        return 0 if self is DomainLabel.SOURCE else 1

    def one_hot(self) -> np.ndarray:
        vec = np.zeros(2, dtype=np.float32)
        vec[self.index] = 1.0
        return vec


@dataclass
class LabelMap:
    """Integer voxel labels over a 3D grid using the canonical legend."""

    grid: np.ndarray
    legend: dict[int, str] = field(default_factory=lambda: dict(CANONICAL_LEGEND))

    def validate(self) -> None:
        if self.grid.ndim != 3:
            raise DataError(f"label grid must be 3D, got shape {self.grid.shape}")
        present = np.unique(self.grid)
        unknown = [int(v) for v in present if int(v) not in self.legend]
        if unknown:
            raise DataError(f"unknown label value(s) {unknown}; legend covers {sorted(self.legend)}")

    def region_voxel_count(self, code: int) -> int:
        return int(np.count_nonzero(self.grid == code))


# Module-level count of guard violations, checked by the test suite after
# label-free runs. Incremented before the exception is raised so that even a
# swallowed exception leaves a trace.
GUARD_TRIP_COUNT = 0


class _ForbiddenLabels(LabelMap):
    """Label stand-in that raises on any access to its contents."""

    def __init__(self, case_id: str):
        object.__setattr__(self, "_case_id", case_id)

    def _trip(self):
        global GUARD_TRIP_COUNT
        GUARD_TRIP_COUNT += 1
        raise LabelAccessError(
            f"labels of target case '{self._case_id}' were accessed during label-free training"
        )

    @property
    def grid(self):  # type: ignore[override]
        self._trip()

    @property
    def legend(self):  # type: ignore[override]
        self._trip()

    def validate(self) -> None:
        self._trip()

    def region_voxel_count(self, code: int) -> int:
        self._trip()


@dataclass
class Case:
    """One subject: a multi-channel 3D volume plus optional labels.

    volume has layout (channels, depth, height, width); spacing is the voxel
    size in mm along (depth, height, width).
    """

    id: str
    volume: np.ndarray
    labels: LabelMap | None
    domain: DomainLabel
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def spatial_shape(self) -> tuple[int, int, int]:
        return tuple(self.volume.shape[1:])

    def validate(self) -> None:
        if self.volume.ndim != 4:
            raise DataError(f"case {self.id}: volume must be 4D (C,D,H,W), got {self.volume.shape}")
        if any(s <= 0 for s in self.spacing):
            raise DataError(f"case {self.id}: spacing must be strictly positive, got {self.spacing}")
        if self.labels is not None and not isinstance(self.labels, _ForbiddenLabels):
            self.labels.validate()
            if tuple(self.labels.grid.shape) != self.spatial_shape:
                raise DataError(
                    f"case {self.id}: label shape {self.labels.grid.shape} does not match "
                    f"volume spatial shape {self.spatial_shape}"
                )


def guard_labels(case: Case) -> Case:
    """Return a copy of ``case`` whose labels raise on any access.

    Used for target-domain cases in label-free training so that any code
    path reading their annotations fails loudly.
    """
    return replace(case, labels=_ForbiddenLabels(case.id))


@dataclass
class FoldSplit:
    """Assignment of case ids to cross-validation folds."""

    k: int
    assignments: dict[str, int]

    def validate(self) -> None:
        if self.k < 2:
            raise DataError(f"fold count must be >= 2, got {self.k}")
        if any(f < 0 or f >= self.k for f in self.assignments.values()):
            raise DataError("fold index out of range")
        sizes = self.fold_sizes()
        if max(sizes) - min(sizes) > 1:
            raise DataError(f"fold sizes differ by more than 1: {sizes}")

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for f in self.assignments.values():
            sizes[f] += 1
        return sizes

    def members(self, fold: int) -> list[str]:
        return sorted(cid for cid, f in self.assignments.items() if f == fold)

    def complement(self, fold: int) -> list[str]:
        return sorted(cid for cid, f in self.assignments.items() if f != fold)
