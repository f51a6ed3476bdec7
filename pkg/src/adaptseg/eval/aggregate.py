"""Mean/median aggregation of per-case metrics into a comparison table."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data.cases import DataError
from .metrics import HD95_SENTINEL, MetricsRecord

# Row order in reports: innermost region first.
REPORT_REGION_ORDER = ("ET", "TC", "WT")


@dataclass
class AggregateRow:
    model_tag: str
    region: str
    n: int
    mean_dice: float
    median_dice: float
    mean_hd95: float
    median_hd95: float
    n_hd95: int  # records entering the hd95 stats (sentinels may be excluded)


@dataclass
class AggregateTable:
    rows: list[AggregateRow]
    include_sentinel_hd95: bool
    sentinel: float

    def row(self, model_tag: str, region: str) -> AggregateRow:
        for r in self.rows:
            if r.model_tag == model_tag and r.region == region:
                return r
        raise KeyError(f"no aggregate row for ({model_tag}, {region})")


def aggregate_metrics(
    records: list[MetricsRecord],
    include_sentinel_hd95: bool = True,
    sentinel: float = HD95_SENTINEL,
    regions: tuple[str, ...] | None = None,
) -> AggregateTable:
    """Per (model, region): mean and median of dice and hd95.

    With include_sentinel_hd95=False, sentinel-valued hd95 entries are
    dropped from the hd95 statistics only (dice is unaffected); a group whose
    hd95 values are all sentinels then reports NaN hd95 stats. ``regions``
    defaults to the full report order; a model missing one of the requested
    regions is an error.
    """
    if not records:
        raise DataError("aggregate_metrics: no records")
    if regions is None:
        regions = REPORT_REGION_ORDER
    tags = sorted({r.model_tag for r in records})
    rows = []
    for tag in tags:
        for region in regions:
            group = [r for r in records if r.model_tag == tag and r.region == region]
            if not group:
                raise DataError(f"aggregate_metrics: empty group ({tag}, {region})")
            dice = np.array([r.dice for r in group], dtype=np.float64)
            hd = np.array([r.hd95 for r in group], dtype=np.float64)
            if not include_sentinel_hd95:
                hd = hd[hd != sentinel]
            rows.append(
                AggregateRow(
                    model_tag=tag,
                    region=region,
                    n=len(group),
                    mean_dice=float(dice.mean()),
                    median_dice=float(np.median(dice)),
                    mean_hd95=float(hd.mean()) if hd.size else float("nan"),
                    median_hd95=float(np.median(hd)) if hd.size else float("nan"),
                    n_hd95=int(hd.size),
                )
            )
    return AggregateTable(rows=rows, include_sentinel_hd95=include_sentinel_hd95, sentinel=sentinel)


def format_table(table: AggregateTable) -> str:
    """Fixed-width text table: mean/median DSC and HD95 per model and region."""
    header = f"{'model':<14} {'region':<6} {'n':>4} {'mean DSC':>9} {'med DSC':>9} {'mean HD95':>10} {'med HD95':>10}"
    lines = [header, "-" * len(header)]
    for r in table.rows:
        lines.append(
            f"{r.model_tag:<14} {r.region:<6} {r.n:>4} {r.mean_dice:>9.3f} {r.median_dice:>9.3f} "
            f"{r.mean_hd95:>10.2f} {r.median_hd95:>10.2f}"
        )
    if not table.include_sentinel_hd95:
        lines.append(f"(hd95 stats exclude sentinel {table.sentinel})")
    return "\n".join(lines)


def write_aggregate_csv(table: AggregateTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model_tag", "region", "n", "mean_dice", "median_dice", "mean_hd95", "median_hd95", "n_hd95"]
        )
        for r in table.rows:
            writer.writerow(
                [r.model_tag, r.region, r.n, repr(r.mean_dice), repr(r.median_dice),
                 repr(r.mean_hd95), repr(r.median_hd95), r.n_hd95]
            )
