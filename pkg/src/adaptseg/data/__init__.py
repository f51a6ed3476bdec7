from .cases import (
    CANONICAL_LEGEND,
    LABEL_BACKGROUND,
    LABEL_EDEMA,
    LABEL_ENHANCING,
    LABEL_NONENHANCING,
    Case,
    DataError,
    DomainLabel,
    FoldSplit,
    LabelAccessError,
    LabelMap,
    guard_labels,
)
from .folds import load_folds, make_folds, save_folds
from .io import load_dataset, write_brats_case, write_synthetic_dataset
from .preprocess import zscore_normalize
from .sampling import Batch, balanced_batch_stream, epoch_length, sample_patch, supervised_batch_stream
from .synthetic import ConfigError, ShiftConfig, SyntheticConfig, generate_synthetic

__all__ = [
    "CANONICAL_LEGEND",
    "LABEL_BACKGROUND",
    "LABEL_EDEMA",
    "LABEL_ENHANCING",
    "LABEL_NONENHANCING",
    "Case",
    "DataError",
    "DomainLabel",
    "FoldSplit",
    "LabelAccessError",
    "LabelMap",
    "guard_labels",
    "load_folds",
    "make_folds",
    "save_folds",
    "load_dataset",
    "write_brats_case",
    "write_synthetic_dataset",
    "zscore_normalize",
    "Batch",
    "balanced_batch_stream",
    "epoch_length",
    "sample_patch",
    "supervised_batch_stream",
    "ConfigError",
    "ShiftConfig",
    "SyntheticConfig",
    "generate_synthetic",
]
