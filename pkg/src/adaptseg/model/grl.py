"""Gradient reversal: identity forward, gradient scaled by -alpha backward."""

from __future__ import annotations

import torch
from torch import nn


class _GradientReversal(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x: torch.Tensor, alpha: float) -> torch.Tensor:
        ctx.alpha = alpha
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        return grad_output.neg() * ctx.alpha, None


def grl(x: torch.Tensor, alpha: float) -> torch.Tensor:
    """Apply gradient reversal with coefficient ``alpha`` (must be >= 0).

    Forward is bit-identical to the input; on the way back the incoming
    gradient is multiplied by -alpha.
    """
    if alpha < 0:
        raise ValueError(f"gradient reversal coefficient must be >= 0, got {alpha}")
    return _GradientReversal.apply(x, float(alpha))


class GradientReversal(nn.Module):
    """Module wrapper so the coefficient can be updated per epoch."""

    def __init__(self, alpha: float = 0.0):
        super().__init__()
        self.alpha = float(alpha)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return grl(x, self.alpha)

    def extra_repr(self) -> str:
        return f"alpha={self.alpha}"
