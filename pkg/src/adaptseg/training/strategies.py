"""The nine training strategies: three from-scratch regimes (with DS-off
variants), four transfer regimes atop a source-trained checkpoint, and the
adversarial (label-free on target) regime.

Strategies are named on the CLI by number (1, 2, 3, optionally suffixed with
's' to switch deep supervision off, 4-8) plus 'uda'.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..model.backbone import SegmentationBackbone, parameter_groups
from ..model.checkpoint import Checkpoint

ALL_GROUPS = ("encoder", "bottleneck", "decoder_trunk", "decoder_last", "projection")


class StrategyKind(str, Enum):
    SCRATCH_SOURCE = "scratch_source"
    SCRATCH_TARGET = "scratch_target"
    SCRATCH_BOTH = "scratch_both"
    PRETRAIN_FULL_RETRAIN = "pretrain_full_retrain"
    FROZEN_FEATURE_EXTRACTOR = "frozen_feature_extractor"
    FINETUNE_DECODER_LAST = "finetune_decoder_last"
    FINETUNE_DECODER = "finetune_decoder"
    FINETUNE_DECODER_BOTTLENECK = "finetune_decoder_bottleneck"
    UDA = "uda"


@dataclass
class Strategy:
    kind: StrategyKind
    deep_supervision: bool
    seg_domains: tuple[str, ...]  # domains whose labels feed the seg loss
    trainable_groups: tuple[str, ...] = ALL_GROUPS
    requires_checkpoint: bool = False
    lr_scale: float = 1.0
    epochs_scale: float = 1.0

    @property
    def is_uda(self) -> bool:
        return self.kind is StrategyKind.UDA


_BASE = {
    StrategyKind.SCRATCH_SOURCE: dict(seg_domains=("source",)),
    StrategyKind.SCRATCH_TARGET: dict(seg_domains=("target",)),
    StrategyKind.SCRATCH_BOTH: dict(seg_domains=("source", "target")),
    StrategyKind.PRETRAIN_FULL_RETRAIN: dict(seg_domains=("target",), requires_checkpoint=True),
    StrategyKind.FROZEN_FEATURE_EXTRACTOR: dict(
        seg_domains=("target",), trainable_groups=("projection",), requires_checkpoint=True
    ),
    StrategyKind.FINETUNE_DECODER_LAST: dict(
        seg_domains=("target",),
        trainable_groups=("decoder_last", "projection"),
        requires_checkpoint=True,
        lr_scale=0.1,
        epochs_scale=0.2,
    ),
    StrategyKind.FINETUNE_DECODER: dict(
        seg_domains=("target",),
        trainable_groups=("decoder_trunk", "decoder_last", "projection"),
        requires_checkpoint=True,
        lr_scale=0.1,
        epochs_scale=0.2,
    ),
    StrategyKind.FINETUNE_DECODER_BOTTLENECK: dict(
        seg_domains=("target",),
        trainable_groups=("bottleneck", "decoder_trunk", "decoder_last", "projection"),
        requires_checkpoint=True,
        lr_scale=0.1,
        epochs_scale=0.2,
    ),
    StrategyKind.UDA: dict(seg_domains=("source",)),
}

_NUMBER_TO_KIND = {
    "1": StrategyKind.SCRATCH_SOURCE,
    "2": StrategyKind.SCRATCH_TARGET,
    "3": StrategyKind.SCRATCH_BOTH,
    "4": StrategyKind.PRETRAIN_FULL_RETRAIN,
    "5": StrategyKind.FROZEN_FEATURE_EXTRACTOR,
    "6": StrategyKind.FINETUNE_DECODER_LAST,
    "7": StrategyKind.FINETUNE_DECODER,
    "8": StrategyKind.FINETUNE_DECODER_BOTTLENECK,
}

STRATEGY_NAMES = tuple(list(_NUMBER_TO_KIND) + ["1s", "2s", "3s", "uda"])


def strategy_from_name(name: str) -> Strategy:
    """Resolve a CLI strategy name (1-8, 1s/2s/3s, uda) to its definition."""
    name = name.strip().lower()
    ds_off = False
    if name == "uda":
        kind = StrategyKind.UDA
        ds_off = True  # the adversarial model trains without deep supervision
    elif name in _NUMBER_TO_KIND:
        kind = _NUMBER_TO_KIND[name]
    elif name.endswith("s") and name[:-1] in ("1", "2", "3"):
        kind = _NUMBER_TO_KIND[name[:-1]]
        ds_off = True
    else:
        raise ValueError(f"unknown strategy '{name}' (expected one of {STRATEGY_NAMES})")
    return Strategy(kind=kind, deep_supervision=not ds_off, **_BASE[kind])


@dataclass
class TrainPlan:
    """Resolved inputs for a training run under one strategy."""

    trainable_params: set[str]
    seg_domains: tuple[str, ...]
    lr_scale: float
    epochs_scale: float
    deep_supervision: bool


def apply_strategy(
    strategy: Strategy,
    backbone: SegmentationBackbone,
    pretrained: Checkpoint | None = None,
) -> TrainPlan:
    """Load pretrained weights when required and set per-parameter trainability.

    Returns the plan (trainable parameter names, dataset selection, schedule
    scales) the trainer consumes.
    """
    if strategy.requires_checkpoint and pretrained is None:
        raise ValueError(f"strategy {strategy.kind.value} requires a pretrained checkpoint")
    if pretrained is not None and strategy.requires_checkpoint:
        backbone.load_state_dict(pretrained.backbone_state)

    groups = parameter_groups(backbone)
    unknown = set(strategy.trainable_groups) - set(groups)
    if unknown:
        raise ValueError(f"unknown parameter groups {sorted(unknown)}")
    trainable = {n for g in strategy.trainable_groups for n in groups[g]}
    for name, param in backbone.named_parameters():
        param.requires_grad_(name in trainable)

    return TrainPlan(
        trainable_params=trainable,
        seg_domains=strategy.seg_domains,
        lr_scale=strategy.lr_scale,
        epochs_scale=strategy.epochs_scale,
        deep_supervision=strategy.deep_supervision,
    )
