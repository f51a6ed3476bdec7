from .losses import (
    DICE_EPS,
    LossBreakdown,
    LossWeights,
    deep_supervised_seg_loss,
    deep_supervision_weights,
    domain_accuracy,
    domain_loss,
    seg_loss,
    total_loss,
)
from .schedules import AlphaSchedule, OptimConfig, alpha_at, lr_at
from .strategies import (
    ALL_GROUPS,
    STRATEGY_NAMES,
    Strategy,
    StrategyKind,
    TrainPlan,
    apply_strategy,
    strategy_from_name,
)
from .trainer import (
    HISTORY_COLUMNS,
    EpochRecord,
    FitResult,
    History,
    StepRecord,
    TrainingConfig,
    TrainingDivergedError,
    fit,
    train,
)

__all__ = [
    "DICE_EPS",
    "LossBreakdown",
    "LossWeights",
    "deep_supervised_seg_loss",
    "deep_supervision_weights",
    "domain_accuracy",
    "domain_loss",
    "seg_loss",
    "total_loss",
    "AlphaSchedule",
    "OptimConfig",
    "alpha_at",
    "lr_at",
    "ALL_GROUPS",
    "STRATEGY_NAMES",
    "Strategy",
    "StrategyKind",
    "TrainPlan",
    "apply_strategy",
    "strategy_from_name",
    "HISTORY_COLUMNS",
    "EpochRecord",
    "FitResult",
    "History",
    "StepRecord",
    "TrainingConfig",
    "TrainingDivergedError",
    "fit",
    "train",
]
