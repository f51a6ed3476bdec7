"""Per-case segmentation metrics: Dice and 95th-percentile surface distance.

Empty-mask conventions (recorded in run metadata by the CLI): both masks
empty -> dice 1, hd95 0; exactly one empty -> dice 0, hd95 = sentinel
(default 373.13 mm, the diagonal of a 240x240x155 volume at 1 mm spacing).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.ndimage import binary_erosion, distance_transform_edt, generate_binary_structure

from ..data.cases import Case, DataError, LabelMap
from .regions import REGION_NAMES, RegionMasks, compose_regions

HD95_SENTINEL = 373.13


@dataclass
class MetricsRecord:
    model_tag: str
    fold: int
    case_id: str
    region: str
    dice: float
    hd95: float


def dice_score(pred: np.ndarray, gt: np.ndarray) -> float:
    """2|P∩G| / (|P|+|G|); both empty -> 1.0."""
    if pred.shape != gt.shape:
        raise DataError(f"dice_score shape mismatch: {pred.shape} vs {gt.shape}")
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    p = int(pred.sum())
    g = int(gt.sum())
    if p + g == 0:
        return 1.0
    inter = int(np.logical_and(pred, gt).sum())
    return 2.0 * inter / (p + g)


def boundary_voxels(mask: np.ndarray) -> np.ndarray:
    """Foreground voxels with at least one background 6-neighbor.

    Positions outside the grid count as background, so foreground touching
    the array edge is boundary.
    """
    mask = mask.astype(bool)
    structure = generate_binary_structure(mask.ndim, 1)
    eroded = binary_erosion(mask, structure=structure, border_value=0)
    return mask & ~eroded


def hd95(
    pred: np.ndarray,
    gt: np.ndarray,
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
    sentinel: float = HD95_SENTINEL,
) -> float:
    """Max of the two directed 95th-percentile boundary distances, in mm.

    Distances are Euclidean with anisotropic ``spacing``, computed with a
    distance transform; percentiles use linear interpolation between order
    statistics. Both masks empty -> 0; exactly one empty -> ``sentinel``.
    """
    if pred.shape != gt.shape:
        raise DataError(f"hd95 shape mismatch: {pred.shape} vs {gt.shape}")
    pred = pred.astype(bool)
    gt = gt.astype(bool)
    p_empty = not pred.any()
    g_empty = not gt.any()
    if p_empty and g_empty:
        return 0.0
    if p_empty or g_empty:
        return float(sentinel)

    bp = boundary_voxels(pred)
    bg = boundary_voxels(gt)
    # Distance from every voxel to the nearest boundary voxel of the other mask.
    dist_to_bg = distance_transform_edt(~bg, sampling=spacing)
    dist_to_bp = distance_transform_edt(~bp, sampling=spacing)
    d_pg = np.percentile(dist_to_bg[bp], 95)
    d_gp = np.percentile(dist_to_bp[bg], 95)
    return float(max(d_pg, d_gp))


def _as_region_masks(obj: RegionMasks | LabelMap) -> RegionMasks:
    if isinstance(obj, RegionMasks):
        return obj
    return compose_regions(obj)


def evaluate_cases(
    predictions: Mapping[str, RegionMasks | LabelMap],
    references: Mapping[str, RegionMasks | LabelMap],
    spacing: tuple[float, float, float] | Mapping[str, tuple[float, float, float]] = (1.0, 1.0, 1.0),
    model_tag: str = "model",
    fold: int = 0,
    sentinel: float = HD95_SENTINEL,
) -> list[MetricsRecord]:
    """One record per (case, region), cases ordered by id."""
    records = []
    for case_id in sorted(references):
        if case_id not in predictions:
            raise DataError(f"missing prediction for case '{case_id}'")
        sp = spacing[case_id] if isinstance(spacing, Mapping) else spacing
        pred = _as_region_masks(predictions[case_id])
        ref = _as_region_masks(references[case_id])
        for region in REGION_NAMES:
            p = pred.by_name(region)
            g = ref.by_name(region)
            records.append(
                MetricsRecord(
                    model_tag=model_tag,
                    fold=fold,
                    case_id=case_id,
                    region=region,
                    dice=dice_score(p, g),
                    hd95=hd95(p, g, sp, sentinel=sentinel),
                )
            )
    return records


def filter_small_et(
    cases: list,
    reference_labels: Mapping[str, LabelMap],
    threshold: int = 60,
) -> list:
    """Keep cases whose reference ET voxel count is >= threshold.

    ``cases`` may hold Case objects or plain ids; the returned list keeps the
    input type and order.
    """
    kept = []
    for c in cases:
        case_id = c.id if isinstance(c, Case) else str(c)
        ref = reference_labels[case_id]
        et_count = int(_as_region_masks(ref).et.sum())
        if et_count >= threshold:
            kept.append(c)
    return kept


def write_metrics_csv(records: list[MetricsRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_tag", "fold", "case_id", "region", "dice", "hd95"])
        for r in records:
            writer.writerow([r.model_tag, r.fold, r.case_id, r.region, repr(r.dice), repr(r.hd95)])


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                MetricsRecord(
                    model_tag=row["model_tag"],
                    fold=int(row["fold"]),
                    case_id=row["case_id"],
                    region=row["region"],
                    dice=float(row["dice"]),
                    hd95=float(row["hd95"]),
                )
            )
    if not records:
        raise DataError(f"{path}: no metric records")
    return records
