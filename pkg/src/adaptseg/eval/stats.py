"""Paired significance testing between models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .metrics import MetricsRecord


class DegenerateVarianceError(ValueError):
    """All paired differences are identical; the t statistic is undefined."""


def student_t_sf_two_sided(t: float, df: int) -> float:
    """Two-sided p-value for a Student-t statistic via the regularized
    incomplete beta function: p = I(df/2, 1/2; df/(df+t^2))."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_t_test(a, b) -> tuple[float, float]:
    """Two-sided paired t-test; returns (t, p).

    Inputs are per-case values aligned by position. Zero variance of the
    differences (including identical inputs) raises DegenerateVarianceError.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired inputs must be 1D and equal length, got {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        raise DegenerateVarianceError(
            "all paired differences are identical; t statistic undefined"
        )
    t = float(d.mean() / (sd / np.sqrt(n)))
    return t, student_t_sf_two_sided(t, n - 1)


@dataclass
class ComparisonRow:
    model_a: str
    model_b: str
    region: str
    metric: str
    n: int
    t: float
    p: float
    note: str = ""


def significance_report(records: list[MetricsRecord]) -> list[ComparisonRow]:
    """Pairwise t-tests between all model tags, per region and metric.

    Cases are matched by (case_id, fold); unmatched cases are dropped from a
    comparison. Degenerate comparisons are reported with NaN statistics and a
    note instead of aborting the whole report.
    """
    tags = sorted({r.model_tag for r in records})
    regions = sorted({r.region for r in records})
    by_key = {}
    for r in records:
        by_key[(r.model_tag, r.region, r.case_id, r.fold)] = r

    rows = []
    for i, tag_a in enumerate(tags):
        for tag_b in tags[i + 1 :]:
            for region in regions:
                keys_a = {
                    (cid, fold)
                    for (tag, reg, cid, fold) in by_key
                    if tag == tag_a and reg == region
                }
                keys_b = {
                    (cid, fold)
                    for (tag, reg, cid, fold) in by_key
                    if tag == tag_b and reg == region
                }
                shared = sorted(keys_a & keys_b)
                if len(shared) < 2:
                    continue
                for metric in ("dice", "hd95"):
                    va = [getattr(by_key[(tag_a, region, cid, fold)], metric) for cid, fold in shared]
                    vb = [getattr(by_key[(tag_b, region, cid, fold)], metric) for cid, fold in shared]
                    try:
                        t, p = paired_t_test(va, vb)
                        note = ""
                    except DegenerateVarianceError:
                        t, p = float("nan"), float("nan")
                        note = "degenerate variance"
                    rows.append(
                        ComparisonRow(
                            model_a=tag_a, model_b=tag_b, region=region,
                            metric=metric, n=len(shared), t=t, p=p, note=note,
                        )
                    )
    return rows
