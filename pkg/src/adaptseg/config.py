"""Run configuration: one JSON document covering data, model, and training.

Two presets ship with the repo: "desk" (small grids, short schedules, runs on
a laptop CPU) and "full" (240x240x155 BraTS-style volumes with the reference
hyperparameters). Every section maps 1:1 onto a config dataclass; unknown
keys are rejected with the offending name.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .data.synthetic import ConfigError, ShiftConfig, SyntheticConfig
from .model.backbone import BackboneConfig
from .model.classifier import ClassifierConfig
from .training.losses import LossWeights
from .training.schedules import AlphaSchedule, OptimConfig
from .training.trainer import TrainingConfig

DATA_ROOT_ENV = "ADAPTSEG_DATA_ROOT"


@dataclass
class RunConfig:
    data_root: str = "data/synth"
    layout: str = "synthetic_container"
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    backbone: BackboneConfig = field(default_factory=BackboneConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    alpha: AlphaSchedule = field(default_factory=AlphaSchedule)
    loss: LossWeights = field(default_factory=LossWeights)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def validate(self) -> None:
        if self.layout not in ("synthetic_container", "brats_nifti"):
            raise ConfigError(f"layout must be synthetic_container or brats_nifti, got '{self.layout}'")
        self.synthetic.validate()
        self.backbone.validate()
        self.classifier.validate()
        self.optim.validate()
        self.alpha.validate()
        self.loss.validate()
        self.training.validate()
        # Cross-section geometry: the classifier pools its input n_blocks
        # times, and that input is the backbone bottleneck, whose spatial
        # size is patch / 2^(n_stages-1). Catch impossible combinations at
        # config time instead of deep inside a training step.
        reduction = 2 ** (self.backbone.n_stages - 1)
        needed = 2**self.classifier.n_blocks
        for axis in self.training.patch_size:
            if axis % reduction != 0:
                raise ConfigError(
                    f"training.patch_size {self.training.patch_size} not divisible by "
                    f"2^(backbone.n_stages-1) = {reduction}"
                )
            if axis // reduction < needed:
                raise ConfigError(
                    f"bottleneck spatial size {axis // reduction} (patch {axis} / {reduction}) "
                    f"is too small for classifier.n_blocks={self.classifier.n_blocks} "
                    f"(needs >= {needed} per axis)"
                )

    def resolved_data_root(self, override: str | None = None) -> Path:
        """CLI flag beats environment variable beats config value."""
        if override:
            return Path(override)
        env = os.environ.get(DATA_ROOT_ENV)
        if env:
            return Path(env)
        return Path(self.data_root)


_TUPLE_FIELDS = {"grid_size", "patch_size"}


def _dataclass_from_dict(cls, data: dict, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key '{where}.{key}'")
        if key == "shift":  # the one nested section
            value = _dataclass_from_dict(ShiftConfig, value, f"{where}.{key}")
        elif key in _TUPLE_FIELDS:
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


_SECTIONS = {
    "synthetic": SyntheticConfig,
    "backbone": BackboneConfig,
    "classifier": ClassifierConfig,
    "optim": OptimConfig,
    "alpha": AlphaSchedule,
    "loss": LossWeights,
    "training": TrainingConfig,
}


def run_config_from_dict(data: dict) -> RunConfig:
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _dataclass_from_dict(_SECTIONS[key], value, key)
        elif key in ("data_root", "layout"):
            kwargs[key] = str(value)
        else:
            raise ConfigError(f"unknown config key '{key}'")
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {
        "data_root": cfg.data_root,
        "layout": cfg.layout,
        "synthetic": dataclasses.asdict(cfg.synthetic),
        "backbone": dataclasses.asdict(cfg.backbone),
        "classifier": dataclasses.asdict(cfg.classifier),
        "optim": dataclasses.asdict(cfg.optim),
        "alpha": dataclasses.asdict(cfg.alpha),
        "loss": dataclasses.asdict(cfg.loss),
        "training": dataclasses.asdict(cfg.training),
    }


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return run_config_from_dict(data)


def save_run_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(run_config_to_dict(cfg), indent=1) + "\n")


def desk_run_config() -> RunConfig:
    """Small-scale preset: 48-cube volumes, 24-cube patches, 120-epoch runs
    with the reversal ramp rescaled proportionally (100/350 of 500 epochs
    maps to 24/84 of 120)."""
    return RunConfig(
        data_root="data/synth",
        layout="synthetic_container",
        synthetic=SyntheticConfig(),
        backbone=BackboneConfig(n_stages=4, base_channels=8, in_channels=4),
        # 24-cube patches leave a 3-cube bottleneck, room for one pooling block.
        classifier=ClassifierConfig(n_blocks=1, conv_channels=32, fc_width=32),
        optim=OptimConfig(max_epochs=120, momentum=0.9),
        alpha=AlphaSchedule(ramp_start=24, ramp_end=84, alpha_max=3.0),
        # The classifier's effective lr is domain_weight * lr; at reference
        # scale 0.01 is enough, but in a 120-epoch run the classifier has to
        # become accurate before epoch 24, which needs the larger weight.
        loss=LossWeights(domain_weight=0.05),
        training=TrainingConfig(batch_size=4, steps_per_epoch=50, patch_size=(24, 24, 24)),
    )


def full_run_config() -> RunConfig:
    """Reference-scale preset (requires externally supplied BraTS-style data)."""
    return RunConfig(
        data_root="data/brats",
        layout="brats_nifti",
        synthetic=SyntheticConfig(
            n_source=1251, n_target=99, grid_size=(240, 240, 160), channels=4
        ),
        # A 5-stage net on 128-cube patches leaves an 8-cube bottleneck; a
        # 4-block classifier would need 16 voxels per axis there, so the
        # preset pairs the reference width with 3 pooling blocks.
        backbone=BackboneConfig(n_stages=5, base_channels=32, in_channels=4),
        classifier=ClassifierConfig(n_blocks=3, conv_channels=100, fc_width=100),
        optim=OptimConfig(max_epochs=500, momentum=0.99),
        alpha=AlphaSchedule(ramp_start=100, ramp_end=350, alpha_max=3.0),
        loss=LossWeights(domain_weight=0.01),
        training=TrainingConfig(batch_size=4, steps_per_epoch=250, patch_size=(128, 128, 128)),
    )
