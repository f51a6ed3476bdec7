"""Epoch schedules: reversal-coefficient ramp and learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class AlphaSchedule:
    """Truncated linear ramp for the gradient-reversal coefficient:
    0 until ramp_start, linear up to alpha_max at ramp_end, constant after."""

    ramp_start: int = 100
    ramp_end: int = 350
    alpha_max: float = 3.0

    def validate(self) -> None:
        if not 0 <= self.ramp_start < self.ramp_end:
            raise ValueError(
                f"need 0 <= ramp_start < ramp_end, got {self.ramp_start}, {self.ramp_end}"
            )
        if self.alpha_max <= 0:
            raise ValueError(f"alpha_max must be > 0, got {self.alpha_max}")

    def scaled(self, factor: float) -> "AlphaSchedule":
        """Proportionally rescaled ramp for shorter runs."""
        return AlphaSchedule(
            ramp_start=round(self.ramp_start * factor),
            ramp_end=max(round(self.ramp_end * factor), round(self.ramp_start * factor) + 1),
            alpha_max=self.alpha_max,
        )


def alpha_at(epoch: int, sched: AlphaSchedule) -> float:
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    sched.validate()
    if epoch <= sched.ramp_start:
        return 0.0
    if epoch >= sched.ramp_end:
        return sched.alpha_max
    return sched.alpha_max * (epoch - sched.ramp_start) / (sched.ramp_end - sched.ramp_start)


@dataclass
class OptimConfig:
    lr0: float = 0.01
    lr_decay_rate: float = 10.0
    lr_decay_power: float = 0.75
    max_epochs: int = 500
    momentum: float = 0.99
    weight_decay: float = 3e-5

    def validate(self) -> None:
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be > 0, got {self.lr0}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.lr_decay_rate < 0 or self.lr_decay_power < 0:
            raise ValueError("lr decay constants must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0,1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")


def lr_at(progress: float, cfg: OptimConfig) -> float:
    """Polynomial decay lr0 / (1 + rate*progress)^power over progress in [0,1]."""
    if not 0.0 <= progress <= 1.0:
        raise ValueError(f"progress must be in [0,1], got {progress}")
    cfg.validate()
    return cfg.lr0 / (1.0 + cfg.lr_decay_rate * progress) ** cfg.lr_decay_power
