"""Static report rendering: per-case distribution box plots and a markdown
summary table built from metric records."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .eval.aggregate import REPORT_REGION_ORDER, aggregate_metrics
from .eval.metrics import MetricsRecord
from .eval.stats import ComparisonRow

_METRICS = ("dice", "hd95")


def render_box_plots(
    records: list[MetricsRecord], out_dir: str | Path
) -> tuple[list[Path], list[str]]:
    """One box plot per (metric, region) comparing models side by side.

    Returns (written paths, notices). A (metric, region) group with no
    records is skipped with a notice instead of an empty figure.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tags = sorted({r.model_tag for r in records})
    written: list[Path] = []
    notices: list[str] = []
    for metric in _METRICS:
        for region in REPORT_REGION_ORDER:
            groups = []
            labels = []
            for tag in tags:
                vals = [
                    getattr(r, metric)
                    for r in records
                    if r.model_tag == tag and r.region == region
                ]
                if vals:
                    groups.append(vals)
                    labels.append(tag)
            if not groups:
                notices.append(f"no records for {metric}/{region}; plot omitted")
                continue
            fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(groups), 3.6))
            ax.boxplot(groups, tick_labels=labels)
            ax.set_title(f"{metric.upper()} {region}")
            ax.set_ylabel("DSC" if metric == "dice" else "HD95 (mm)")
            ax.grid(axis="y", alpha=0.3)
            fig.tight_layout()
            path = out / f"{metric}_{region}.png"
            fig.savefig(path, dpi=110)
            plt.close(fig)
            written.append(path)
    return written, notices


def _markdown_table(records: list[MetricsRecord]) -> list[str]:
    present = tuple(reg for reg in REPORT_REGION_ORDER if any(r.region == reg for r in records))
    table = aggregate_metrics(records, regions=present)
    lines = [
        "| model | region | n | mean DSC | median DSC | mean HD95 | median HD95 |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in table.rows:
        lines.append(
            f"| {r.model_tag} | {r.region} | {r.n} | {r.mean_dice:.3f} | {r.median_dice:.3f} "
            f"| {r.mean_hd95:.2f} | {r.median_hd95:.2f} |"
        )
    return lines


def write_summary_markdown(
    records: list[MetricsRecord],
    path: str | Path,
    filtered_records: list[MetricsRecord] | None = None,
    min_et: int | None = None,
    comparisons: list[ComparisonRow] | None = None,
    notices: list[str] | None = None,
) -> None:
    """Deterministic markdown summary: aggregate table(s), optional pairwise
    significance section, and any rendering notices."""
    lines = ["# Evaluation summary", "", "## All cases", ""]
    lines += _markdown_table(records)
    if filtered_records is not None:
        lines += ["", f"## Cases with ET >= {min_et} voxels", ""]
        if filtered_records:
            lines += _markdown_table(filtered_records)
        else:
            lines.append("_no cases retained by the filter_")
    if comparisons:
        lines += ["", "## Pairwise t-tests", "",
                  "| A | B | region | metric | n | t | p |", "|---|---|---|---|---|---|---|"]
        for c in comparisons:
            t = "nan" if c.note else f"{c.t:.3f}"
            p = "nan" if c.note else f"{c.p:.4f}"
            lines.append(
                f"| {c.model_a} | {c.model_b} | {c.region} | {c.metric} | {c.n} | {t} | {p} |"
            )
    if notices:
        lines += ["", "## Notices", ""]
        lines += [f"- {n}" for n in notices]
    Path(path).write_text("\n".join(lines) + "\n")
