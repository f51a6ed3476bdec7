from .aggregate import (
    REPORT_REGION_ORDER,
    AggregateRow,
    AggregateTable,
    aggregate_metrics,
    format_table,
    write_aggregate_csv,
)
from .cv import CvExperiment, CvResult, predict_case, run_cv
from .metrics import (
    HD95_SENTINEL,
    MetricsRecord,
    boundary_voxels,
    dice_score,
    evaluate_cases,
    filter_small_et,
    hd95,
    read_metrics_csv,
    write_metrics_csv,
)
from .regions import (
    N_REGIONS,
    REGION_NAMES,
    RegionMasks,
    binarize_prediction,
    compose_region_stack,
    compose_regions,
    repair_nesting,
)
from .stats import (
    ComparisonRow,
    DegenerateVarianceError,
    paired_t_test,
    significance_report,
    student_t_sf_two_sided,
)

__all__ = [
    "REPORT_REGION_ORDER",
    "AggregateRow",
    "AggregateTable",
    "aggregate_metrics",
    "format_table",
    "write_aggregate_csv",
    "CvExperiment",
    "CvResult",
    "predict_case",
    "run_cv",
    "HD95_SENTINEL",
    "MetricsRecord",
    "boundary_voxels",
    "dice_score",
    "evaluate_cases",
    "filter_small_et",
    "hd95",
    "read_metrics_csv",
    "write_metrics_csv",
    "N_REGIONS",
    "REGION_NAMES",
    "RegionMasks",
    "binarize_prediction",
    "compose_region_stack",
    "compose_regions",
    "repair_nesting",
    "ComparisonRow",
    "DegenerateVarianceError",
    "paired_t_test",
    "significance_report",
    "student_t_sf_two_sided",
]
