"""Gradient reversal: identity forward, sign-flipped scaled backward."""

import numpy as np
import pytest
import torch

from adaptseg.model import GradientReversal, grl


def test_forward_is_bit_exact_identity():
    x = torch.randn(4, 7, dtype=torch.float64)
    y = grl(x, alpha=2.5)
    assert torch.equal(y, x)


def test_backward_scales_and_flips_gradient():
    for alpha in (0.0, 0.5, 1.0, 3.0):
        x = torch.randn(5, 3, dtype=torch.float64, requires_grad=True)
        upstream = torch.randn(5, 3, dtype=torch.float64)
        grl(x, alpha).backward(upstream)
        assert torch.equal(x.grad, -alpha * upstream)


def test_grl_vs_identity_path_through_a_network():
    torch.manual_seed(0)
    net = torch.nn.Sequential(
        torch.nn.Linear(6, 8, dtype=torch.float64),
        torch.nn.Tanh(),
        torch.nn.Linear(8, 2, dtype=torch.float64),
    )
    x = torch.randn(3, 6, dtype=torch.float64)
    alpha = 1.7

    def run(with_grl):
        for p in net.parameters():
            p.grad = None
        feats = net[0](x)
        h = grl(feats, alpha) if with_grl else feats
        loss = net[2](net[1](h)).pow(2).sum()
        loss.backward()
        return {n: p.grad.clone() for n, p in net.named_parameters()}

    g_plain = run(False)
    g_rev = run(True)
    # layers after the reversal point see the same gradient ...
    assert torch.equal(g_rev["2.weight"], g_plain["2.weight"])
    # ... layers before it see the exact negated, scaled gradient
    for name in ("0.weight", "0.bias"):
        rel = (g_rev[name] + alpha * g_plain[name]).abs().max() / g_plain[name].abs().max()
        assert rel.item() <= 1e-10


def test_module_form_allows_alpha_updates():
    layer = GradientReversal(alpha=0.0)
    x = torch.randn(2, 4, requires_grad=True, dtype=torch.float64)
    layer(x).sum().backward()
    assert torch.equal(x.grad, torch.zeros_like(x))
    layer.alpha = 2.0
    x.grad = None
    layer(x).sum().backward()
    assert torch.equal(x.grad, torch.full_like(x, -2.0))


def test_negative_alpha_rejected():
    with pytest.raises(ValueError):
        grl(torch.zeros(1), alpha=-0.1)


def test_finite_difference_check_through_full_loss():
    # Autograd through the reversal vs central differences of the plain
    # (reversal-free) loss: downstream parameters must match it exactly,
    # upstream parameters must match -alpha times it.
    torch.manual_seed(1)
    feat = torch.nn.Linear(5, 6, dtype=torch.float64)
    head = torch.nn.Linear(6, 2, dtype=torch.float64)
    x = torch.randn(4, 5, dtype=torch.float64)
    y = torch.tensor([0, 1, 0, 1])
    alpha = 1.3

    def plain_loss():
        return torch.nn.functional.cross_entropy(head(feat(x)), y)

    torch.nn.functional.cross_entropy(head(grl(feat(x), alpha)), y).backward()

    rng = np.random.default_rng(0)
    checked = 0
    for p, factor in [(q, -alpha) for q in feat.parameters()] + [
        (q, 1.0) for q in head.parameters()
    ]:
        flat = p.detach().reshape(-1)
        for idx in rng.choice(flat.numel(), size=min(12, flat.numel()), replace=False):
            eps = 1e-6
            with torch.no_grad():
                flat[idx] += eps
                up = plain_loss().item()
                flat[idx] -= 2 * eps
                down = plain_loss().item()
                flat[idx] += eps
            fd = (up - down) / (2 * eps)
            an = p.grad.reshape(-1)[idx].item()
            assert an == pytest.approx(factor * fd, abs=1e-7, rel=1e-4)
            checked += 1
    assert checked >= 32
