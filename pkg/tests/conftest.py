import numpy as np
import pytest
import torch

from adaptseg.data import (
    CANONICAL_LEGEND,
    Case,
    DomainLabel,
    LabelMap,
    SyntheticConfig,
    generate_synthetic,
)


@pytest.fixture(autouse=True)
def _single_thread():
    # Keep torch deterministic and cheap across the suite.
    torch.set_num_threads(1)


def make_case(case_id="case_0", shape=(16, 16, 16), channels=2, domain=DomainLabel.SOURCE,
              labels=None, seed=0, spacing=(1.0, 1.0, 1.0)):
    rng = np.random.default_rng(seed)
    volume = rng.normal(size=(channels, *shape)).astype(np.float32)
    if labels is None:
        grid = rng.integers(0, 4, size=shape).astype(np.uint8)
        labels = LabelMap(grid=grid, legend=CANONICAL_LEGEND)
    return Case(id=case_id, volume=volume, labels=labels, domain=domain, spacing=spacing)


@pytest.fixture(scope="session")
def small_synth():
    """A cheap two-domain synthetic set shared by read-only tests."""
    cfg = SyntheticConfig(n_source=6, n_target=4, grid_size=(16, 16, 16), seed=7)
    return generate_synthetic(cfg)
