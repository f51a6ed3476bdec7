"""Checkpoint container: everything needed for exact training resume."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch

from .backbone import BackboneConfig
from .classifier import ClassifierConfig


@dataclass
class Checkpoint:
    backbone_cfg: BackboneConfig
    backbone_state: dict[str, torch.Tensor]
    classifier_cfg: ClassifierConfig | None = None
    classifier_state: dict[str, torch.Tensor] | None = None
    optimizer_state: dict[str, Any] | None = None
    epoch: int = 0
    alpha: float = 0.0
    numpy_rng_state: dict[str, Any] | None = None
    torch_rng_state: torch.Tensor | None = None
    history_rows: list[dict[str, float]] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    payload = {
        "backbone_cfg": asdict(ckpt.backbone_cfg),
        "backbone_state": ckpt.backbone_state,
        "classifier_cfg": asdict(ckpt.classifier_cfg) if ckpt.classifier_cfg else None,
        "classifier_state": ckpt.classifier_state,
        "optimizer_state": ckpt.optimizer_state,
        "epoch": ckpt.epoch,
        "alpha": ckpt.alpha,
        "numpy_rng_state": ckpt.numpy_rng_state,
        "torch_rng_state": ckpt.torch_rng_state,
        "history_rows": ckpt.history_rows,
        "extra": ckpt.extra,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint {path} does not exist")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    return Checkpoint(
        backbone_cfg=BackboneConfig(**payload["backbone_cfg"]),
        backbone_state=payload["backbone_state"],
        classifier_cfg=ClassifierConfig(**payload["classifier_cfg"]) if payload["classifier_cfg"] else None,
        classifier_state=payload["classifier_state"],
        optimizer_state=payload["optimizer_state"],
        epoch=payload["epoch"],
        alpha=payload["alpha"],
        numpy_rng_state=payload["numpy_rng_state"],
        torch_rng_state=payload["torch_rng_state"],
        history_rows=payload["history_rows"],
        extra=payload["extra"],
    )


def capture_rng(np_rng: np.random.Generator) -> dict[str, Any]:
    return np_rng.bit_generator.state


def restore_rng(np_rng: np.random.Generator, state: dict[str, Any]) -> None:
    np_rng.bit_generator.state = state
