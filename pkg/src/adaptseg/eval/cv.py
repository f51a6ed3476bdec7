"""Full-volume prediction and the cross-validation harness.

Cases fed to these functions are expected to be normalized already (the CLI
applies the z-score step right after loading).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import torch
import torch.nn.functional as F

from ..data.cases import Case, DataError, FoldSplit
from ..model.backbone import BackboneConfig, SegmentationBackbone
from ..model.checkpoint import Checkpoint
from ..model.classifier import ClassifierConfig
from ..training.losses import LossWeights
from ..training.schedules import AlphaSchedule, OptimConfig
from ..training.strategies import Strategy, strategy_from_name
from ..training.trainer import FitResult, TrainingConfig, train
from .aggregate import AggregateTable, aggregate_metrics
from .metrics import MetricsRecord, evaluate_cases
from .regions import RegionMasks, binarize_prediction, compose_regions


def predict_case(backbone: SegmentationBackbone, case: Case) -> RegionMasks:
    """Full-volume inference: pad to the network's divisibility constraint,
    forward once, crop back, threshold, repair nesting."""
    factor = 2 ** (backbone.cfg.n_stages - 1)
    dims = case.spatial_shape
    pad_to = [((d + factor - 1) // factor) * factor for d in dims]
    # F.pad order: last axis first, (before, after) pairs.
    pad = []
    for d, p in zip(reversed(dims), reversed(pad_to)):
        pad += [0, p - d]
    x = torch.from_numpy(case.volume).unsqueeze(0)
    was_training = backbone.training
    backbone.eval()
    with torch.no_grad():
        if any(pad):
            x = F.pad(x, pad)
        seg_logits, _, _ = backbone(x)
        probs = torch.sigmoid(seg_logits)[0]
    if was_training:
        backbone.train()
    probs = probs[:, : dims[0], : dims[1], : dims[2]]
    return binarize_prediction(probs.numpy())


@dataclass
class CvExperiment:
    strategy: str
    model_tag: str
    backbone_cfg: BackboneConfig
    classifier_cfg: ClassifierConfig
    optim_cfg: OptimConfig
    alpha_schedule: AlphaSchedule
    loss_weights: LossWeights
    training_cfg: TrainingConfig
    pretrained: Checkpoint | str | Path | None = None
    out_dir: str | Path | None = None


@dataclass
class CvResult:
    records: list[MetricsRecord]
    table: AggregateTable
    fold_results: dict[int, FitResult]


def run_cv(
    experiment: CvExperiment,
    source: list[Case],
    target: list[Case],
    folds: FoldSplit,
) -> CvResult:
    """Train/evaluate across folds of the target set.

    Source cases are fully included in every fold's training (when the
    strategy uses them). Strategies that consume no target training data are
    trained once and reused across folds. Held-out predictions are
    concatenated over folds before aggregation, so each target case is
    predicted exactly once.
    """
    target_by_id = {c.id: c for c in target}
    if set(folds.assignments) != set(target_by_id):
        raise DataError(
            "fold assignments do not match the target dataset "
            f"({len(folds.assignments)} assigned vs {len(target_by_id)} cases)"
        )

    strategy: Strategy = strategy_from_name(experiment.strategy)
    uses_target_train = strategy.is_uda or "target" in strategy.seg_domains

    records: list[MetricsRecord] = []
    fold_results: dict[int, FitResult] = {}
    shared_result: FitResult | None = None

    for fold in range(folds.k):
        held_out = [target_by_id[cid] for cid in folds.members(fold)]
        train_target = [target_by_id[cid] for cid in folds.complement(fold)]

        if uses_target_train or shared_result is None:
            out_dir = (
                Path(experiment.out_dir) / f"fold{fold}" if experiment.out_dir is not None else None
            )
            result = train(
                strategy,
                source,
                train_target if uses_target_train else [],
                backbone_cfg=experiment.backbone_cfg,
                classifier_cfg=experiment.classifier_cfg,
                optim_cfg=experiment.optim_cfg,
                alpha_schedule=experiment.alpha_schedule,
                loss_weights=experiment.loss_weights,
                training_cfg=replace(experiment.training_cfg, seed=experiment.training_cfg.seed + fold),
                out_dir=out_dir,
                pretrained=experiment.pretrained,
            )
            if not uses_target_train:
                shared_result = result
        else:
            result = shared_result
        fold_results[fold] = result

        predictions = {c.id: predict_case(result.backbone, c) for c in held_out}
        references = {c.id: compose_regions(c.labels) for c in held_out}
        spacing = {c.id: c.spacing for c in held_out}
        records += evaluate_cases(
            predictions, references, spacing, model_tag=experiment.model_tag, fold=fold
        )

    return CvResult(records=records, table=aggregate_metrics(records), fold_results=fold_results)
