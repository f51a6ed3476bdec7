"""Training loop shared by every strategy.

``train`` wires a strategy to datasets, builds the network(s) and batch
stream, then hands off to ``fit``, the step loop. ``fit`` is public on
purpose: tests and ablations can drive it with hand-built models/streams.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np
import torch

from ..data.cases import Case, DataError, guard_labels
from ..data.sampling import Batch, balanced_batch_stream, epoch_length, supervised_batch_stream
from ..model.backbone import BackboneConfig, SegmentationBackbone, build_backbone
from ..model.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from ..model.classifier import ClassifierConfig, DomainClassifier, build_classifier
from ..model.joint import JointOutput, forward_joint
from .losses import (
    LossBreakdown,
    LossWeights,
    deep_supervised_seg_loss,
    domain_accuracy,
    domain_loss,
    seg_loss,
    total_loss,
)
from .schedules import AlphaSchedule, OptimConfig, alpha_at, lr_at
from .strategies import Strategy, apply_strategy, strategy_from_name

HISTORY_COLUMNS = ("epoch", "l_seg", "l_d", "l_total", "domain_accuracy", "alpha", "lr")


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainingConfig:
    batch_size: int = 4
    steps_per_epoch: int | None = None  # None: derive from dataset sizes
    patch_size: tuple[int, int, int] = (24, 24, 24)
    foreground_bias: float = 0.33
    seed: int = 0
    checkpoint_every: int = 0  # epochs between periodic checkpoints; 0 = final only

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ValueError(f"steps_per_epoch must be >= 1, got {self.steps_per_epoch}")


@dataclass
class StepRecord:
    epoch: int
    step: int
    loss: LossBreakdown
    domain_accuracy: float
    alpha: float
    lr: float
    case_ids: tuple[str, ...] = ()


@dataclass
class EpochRecord:
    epoch: int
    loss: LossBreakdown
    domain_accuracy: float
    alpha: float
    lr: float

    def as_row(self) -> dict[str, float]:
        return {
            "epoch": self.epoch,
            "l_seg": self.loss.l_seg,
            "l_d": self.loss.l_d,
            "l_total": self.loss.l_total,
            "domain_accuracy": self.domain_accuracy,
            "alpha": self.alpha,
            "lr": self.lr,
        }


@dataclass
class History:
    steps: list[StepRecord] = field(default_factory=list)
    epochs: list[EpochRecord] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS)
            writer.writeheader()
            for rec in self.epochs:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.as_row().items()})

    def steps_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "step", "l_seg", "l_d", "l_total", "domain_accuracy", "alpha", "lr"])
            for r in self.steps:
                writer.writerow(
                    [r.epoch, r.step, repr(r.loss.l_seg), repr(r.loss.l_d), repr(r.loss.l_total),
                     repr(r.domain_accuracy), repr(r.alpha), repr(r.lr)]
                )


@dataclass
class FitResult:
    backbone: SegmentationBackbone
    classifier: DomainClassifier | None
    history: History
    checkpoint: Checkpoint
    checkpoint_path: Path | None


def _loss_for_batch(
    backbone: SegmentationBackbone,
    classifier: DomainClassifier | None,
    batch: Batch,
    alpha: float,
    weights: LossWeights,
    deep_supervision: bool,
):
    x = torch.from_numpy(batch.patches)
    targets = torch.from_numpy(batch.seg_targets)
    mask = torch.from_numpy(batch.source_mask)
    onehot = torch.from_numpy(batch.domain_onehot)

    if classifier is not None:
        out = forward_joint(backbone, classifier, x, alpha)
    else:
        seg_logits, aux, _ = backbone(x)
        out = JointOutput(seg_logits=seg_logits, aux_seg_logits=aux, domain_logits=None)

    if deep_supervision and out.aux_seg_logits:
        l_seg_t = deep_supervised_seg_loss([out.seg_logits, *out.aux_seg_logits], targets, mask)
    else:
        l_seg_t = seg_loss(out.seg_logits, targets, mask)

    if out.domain_logits is not None:
        l_d_t = domain_loss(out.domain_logits, onehot)
        total_t = l_seg_t + weights.domain_weight * l_d_t
        acc = domain_accuracy(out.domain_logits, onehot)
        l_d_val = float(l_d_t.detach())
    else:
        total_t = l_seg_t
        acc = float("nan")
        l_d_val = 0.0

    breakdown = total_loss(float(l_seg_t.detach()), l_d_val, weights)
    return total_t, breakdown, acc


def _snapshot(
    backbone, classifier, optimizer, epoch, alpha, np_rng, history, seed
) -> Checkpoint:
    return Checkpoint(
        backbone_cfg=backbone.cfg,
        backbone_state={k: v.detach().clone() for k, v in backbone.state_dict().items()},
        classifier_cfg=classifier.cfg if classifier is not None else None,
        classifier_state=(
            {k: v.detach().clone() for k, v in classifier.state_dict().items()}
            if classifier is not None
            else None
        ),
        optimizer_state=optimizer.state_dict(),
        epoch=epoch,
        alpha=alpha,
        numpy_rng_state=np_rng.bit_generator.state if np_rng is not None else None,
        torch_rng_state=torch.get_rng_state(),
        history_rows=[r.as_row() for r in history.epochs],
        extra={"seed": seed},
    )


def fit(
    *,
    backbone: SegmentationBackbone,
    classifier: DomainClassifier | None,
    stream: Iterator[Batch],
    epochs: int,
    steps_per_epoch: int,
    optim_cfg: OptimConfig,
    alpha_schedule: AlphaSchedule | None,
    loss_weights: LossWeights,
    deep_supervision: bool,
    np_rng: np.random.Generator | None = None,
    out_dir: str | Path | None = None,
    checkpoint_every: int = 0,
    start_epoch: int = 0,
    optimizer_state: dict | None = None,
    history: History | None = None,
    seed: int = 0,
) -> FitResult:
    """Run the step loop; returns model(s), history, and the final checkpoint.

    The learning rate follows lr_at(epoch/epochs); the reversal coefficient
    follows alpha_schedule when a classifier is attached, else stays 0.
    Non-finite total loss aborts with a diagnostic naming the batch's cases.
    """
    params = [p for p in backbone.parameters() if p.requires_grad]
    if classifier is not None:
        params += [p for p in classifier.parameters() if p.requires_grad]
    if not params:
        raise ValueError("no trainable parameters")
    optimizer = torch.optim.SGD(
        params,
        lr=optim_cfg.lr0,
        momentum=optim_cfg.momentum,
        weight_decay=optim_cfg.weight_decay,
        nesterov=optim_cfg.momentum > 0,
    )
    if optimizer_state is not None:
        optimizer.load_state_dict(optimizer_state)

    history = history or History()
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    alpha = 0.0
    for epoch in range(start_epoch, epochs):
        lr = lr_at(epoch / epochs, optim_cfg)
        for group in optimizer.param_groups:
            group["lr"] = lr
        alpha = (
            alpha_at(epoch, alpha_schedule)
            if (classifier is not None and alpha_schedule is not None)
            else 0.0
        )

        seg_sum = dom_sum = acc_sum = 0.0
        acc_n = 0
        for step in range(steps_per_epoch):
            batch = next(stream)
            total_t, breakdown, acc = _loss_for_batch(
                backbone, classifier, batch, alpha, loss_weights, deep_supervision
            )
            if not breakdown.finite:
                if out_path is not None:
                    (out_path / "divergence.json").write_text(
                        json.dumps(
                            {"epoch": epoch, "step": step, "case_ids": batch.case_ids,
                             "l_seg": breakdown.l_seg, "l_d": breakdown.l_d},
                            indent=1,
                        )
                    )
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} step {step}; batch cases {batch.case_ids}"
                )
            optimizer.zero_grad(set_to_none=True)
            total_t.backward()
            optimizer.step()

            history.steps.append(
                StepRecord(epoch=epoch, step=step, loss=breakdown,
                           domain_accuracy=acc, alpha=alpha, lr=lr,
                           case_ids=tuple(batch.case_ids))
            )
            seg_sum += breakdown.l_seg
            dom_sum += breakdown.l_d
            if not math.isnan(acc):
                acc_sum += acc
                acc_n += 1

        epoch_loss = total_loss(seg_sum / steps_per_epoch, dom_sum / steps_per_epoch, loss_weights)
        history.epochs.append(
            EpochRecord(
                epoch=epoch,
                loss=epoch_loss,
                domain_accuracy=acc_sum / acc_n if acc_n else float("nan"),
                alpha=alpha,
                lr=lr,
            )
        )

        if (
            out_path is not None
            and checkpoint_every > 0
            and (epoch + 1) % checkpoint_every == 0
            and epoch + 1 < epochs
        ):
            ckpt = _snapshot(backbone, classifier, optimizer, epoch + 1, alpha, np_rng, history, seed)
            save_checkpoint(ckpt, out_path / f"checkpoint_ep{epoch + 1:04d}.pt")

    final = _snapshot(backbone, classifier, optimizer, epochs, alpha, np_rng, history, seed)
    final_path = None
    if out_path is not None:
        final_path = out_path / "checkpoint_final.pt"
        save_checkpoint(final, final_path)
        history.to_csv(out_path / "history.csv")
        history.steps_to_csv(out_path / "history_steps.csv")
    return FitResult(
        backbone=backbone, classifier=classifier, history=history,
        checkpoint=final, checkpoint_path=final_path,
    )


def _resolve_pretrained(pretrained) -> Checkpoint | None:
    if pretrained is None or isinstance(pretrained, Checkpoint):
        return pretrained
    return load_checkpoint(pretrained)


def train(
    strategy: Strategy | str,
    source: list[Case],
    target: list[Case],
    *,
    backbone_cfg: BackboneConfig,
    classifier_cfg: ClassifierConfig,
    optim_cfg: OptimConfig,
    alpha_schedule: AlphaSchedule,
    loss_weights: LossWeights,
    training_cfg: TrainingConfig,
    out_dir: str | Path | None = None,
    pretrained: Checkpoint | str | Path | None = None,
    resume_from: str | Path | None = None,
) -> FitResult:
    """Train one strategy end to end.

    Adversarial runs draw balanced batches from (source, label-guarded
    target); supervised runs draw from the domains the strategy's seg loss
    uses. Resume rebuilds the stream from the run seed and fast-forwards it
    to the checkpoint epoch, so the continued run consumes exactly the
    batches an unbroken run would have.
    """
    if isinstance(strategy, str):
        strategy = strategy_from_name(strategy)
    training_cfg.validate()
    loss_weights.validate()
    optim_cfg.validate()

    torch.manual_seed(training_cfg.seed)
    np_rng = np.random.default_rng(training_cfg.seed)

    bb_cfg = replace(backbone_cfg, deep_supervision=strategy.deep_supervision)
    backbone = build_backbone(bb_cfg)
    classifier = (
        build_classifier(backbone.bottleneck_channels, classifier_cfg, bb_cfg.spatial_dims)
        if strategy.is_uda
        else None
    )
    plan = apply_strategy(strategy, backbone, _resolve_pretrained(pretrained))

    epochs = max(1, round(optim_cfg.max_epochs * plan.epochs_scale))
    optim_resolved = replace(
        optim_cfg, lr0=optim_cfg.lr0 * plan.lr_scale, max_epochs=epochs
    )

    if strategy.is_uda:
        if not source or not target:
            raise DataError("adversarial training needs both source and target cases")
        guarded = [guard_labels(c) for c in target]
        stream = balanced_batch_stream(
            source, guarded, training_cfg.batch_size, np_rng,
            patch_size=training_cfg.patch_size, foreground_bias=training_cfg.foreground_bias,
        )
        steps = training_cfg.steps_per_epoch or epoch_length(
            len(source), len(target), training_cfg.batch_size
        )
    else:
        pool: list[Case] = []
        if "source" in plan.seg_domains:
            pool += source
        if "target" in plan.seg_domains:
            pool += target
        if not pool:
            raise DataError(f"strategy {strategy.kind.value} selected no training cases")
        stream = supervised_batch_stream(
            pool, training_cfg.batch_size, np_rng,
            patch_size=training_cfg.patch_size, foreground_bias=training_cfg.foreground_bias,
        )
        steps = training_cfg.steps_per_epoch or math.ceil(len(pool) / training_cfg.batch_size)

    start_epoch = 0
    optimizer_state = None
    history = None
    if resume_from is not None:
        ckpt = load_checkpoint(resume_from)
        backbone.load_state_dict(ckpt.backbone_state)
        if classifier is not None and ckpt.classifier_state is not None:
            classifier.load_state_dict(ckpt.classifier_state)
        optimizer_state = ckpt.optimizer_state
        start_epoch = ckpt.epoch
        if ckpt.torch_rng_state is not None:
            torch.set_rng_state(ckpt.torch_rng_state)
        history = History(
            epochs=[
                EpochRecord(
                    epoch=int(r["epoch"]),
                    loss=LossBreakdown(l_seg=r["l_seg"], l_d=r["l_d"], l_total=r["l_total"]),
                    domain_accuracy=r["domain_accuracy"],
                    alpha=r["alpha"],
                    lr=r["lr"],
                )
                for r in ckpt.history_rows
            ]
        )
        for _ in range(start_epoch * steps):
            next(stream)

    return fit(
        backbone=backbone,
        classifier=classifier,
        stream=stream,
        epochs=epochs,
        steps_per_epoch=steps,
        optim_cfg=optim_resolved,
        alpha_schedule=alpha_schedule if strategy.is_uda else None,
        loss_weights=loss_weights,
        deep_supervision=strategy.deep_supervision,
        np_rng=np_rng,
        out_dir=out_dir,
        checkpoint_every=training_cfg.checkpoint_every,
        start_epoch=start_epoch,
        optimizer_state=optimizer_state,
        history=history,
        seed=training_cfg.seed,
    )
