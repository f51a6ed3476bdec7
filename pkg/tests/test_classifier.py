import pytest
import torch

from adaptseg.model import (
    ClassifierConfig,
    ShapeError,
    build_classifier,
    classifier_parameter_count,
)


def test_output_is_two_logits_per_item():
    clf = build_classifier(in_channels=8, cfg=ClassifierConfig(n_blocks=2, conv_channels=16, fc_width=16))
    out = clf(torch.randn(5, 8, 8, 8, 8))
    assert out.shape == (5, 2)


def test_parameter_count_matches_closed_form():
    for in_ch, cfg in [
        (8, ClassifierConfig(n_blocks=1, conv_channels=16, fc_width=16)),
        (16, ClassifierConfig(n_blocks=2, conv_channels=32, fc_width=32)),
        (64, ClassifierConfig(n_blocks=4, conv_channels=100, fc_width=100)),
    ]:
        clf = build_classifier(in_channels=in_ch, cfg=cfg)
        actual = sum(p.numel() for p in clf.parameters())
        assert actual == classifier_parameter_count(in_ch, cfg)


def test_minimum_input_size_boundary():
    cfg = ClassifierConfig(n_blocks=1, conv_channels=4, fc_width=4)
    clf = build_classifier(in_channels=2, cfg=cfg)
    assert clf(torch.randn(1, 2, 2, 2, 2)).shape == (1, 2)
    with pytest.raises(ShapeError):
        clf(torch.randn(1, 2, 1, 1, 1))


def test_multi_block_needs_exponential_extent():
    cfg = ClassifierConfig(n_blocks=3, conv_channels=4, fc_width=4)
    clf = build_classifier(in_channels=2, cfg=cfg)
    assert clf(torch.randn(1, 2, 8, 8, 8)).shape == (1, 2)
    with pytest.raises(ShapeError):
        clf(torch.randn(1, 2, 7, 8, 8))


def test_pooling_makes_output_size_agnostic():
    cfg = ClassifierConfig(n_blocks=1, conv_channels=4, fc_width=4)
    clf = build_classifier(in_channels=2, cfg=cfg)
    a = clf(torch.randn(1, 2, 4, 4, 4))
    b = clf(torch.randn(1, 2, 10, 12, 6))
    assert a.shape == b.shape == (1, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        ClassifierConfig(n_blocks=0).validate()
    with pytest.raises(ValueError):
        ClassifierConfig(conv_channels=0).validate()
