"""Two-domain synthetic benchmark generator.

Each case is an ellipsoidal "brain" on a zero background containing a lesion
built from nested ellipsoids: a solid nonenhancing core (always present), an
enhancing ring around it (present with a domain-specific probability) and an
edema halo outside that (ditto). The target domain differs from the source in
four ways: lesion contrast is rescaled/offset, lesion size is rescaled, the
background noise texture has a different correlation length, and a spatially
varying multiplicative gain field modulates target intensities. Intensity
differences are applied to lesion *contrast* or as spatially varying fields
rather than as a global affine change, so per-channel z-scoring cannot
remove the shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .cases import (
    LABEL_EDEMA,
    LABEL_ENHANCING,
    LABEL_NONENHANCING,
    Case,
    DataError,
    DomainLabel,
    LabelMap,
)


class ConfigError(ValueError):
    """A configuration field failed validation; message names the field."""


@dataclass
class ShiftConfig:
    """How the target domain differs from the source domain."""

    intensity_scale: float = 0.45
    intensity_offset: float = 0.0
    enhancing_ring_probability_source: float = 0.9
    enhancing_ring_probability_target: float = 0.6
    edema_probability_source: float = 1.0
    edema_probability_target: float = 0.55
    size_scale_target: float = 0.7
    # Typical log-amplitude of a multiplicative gain field applied to target
    # cases only, imitating spatially varying noise amplification from an
    # accelerated acquisition at the target site. Spatially varying gain
    # survives per-channel z-scoring and instance norm, so the domain stays
    # recognizable from any patch.
    bias_field_strength_target: float = 0.5

    def validate(self) -> None:
        for name in (
            "enhancing_ring_probability_source",
            "enhancing_ring_probability_target",
            "edema_probability_source",
            "edema_probability_target",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"shift.{name} must be in [0,1], got {p}")
        if self.size_scale_target <= 0:
            raise ConfigError(f"shift.size_scale_target must be > 0, got {self.size_scale_target}")
        if not 0.0 <= self.bias_field_strength_target < 1.0:
            raise ConfigError(
                "shift.bias_field_strength_target must be in [0,1), "
                f"got {self.bias_field_strength_target}"
            )


@dataclass
class SyntheticConfig:
    n_source: int = 200
    n_target: int = 60
    grid_size: tuple[int, int, int] = (48, 48, 48)
    channels: int = 4
    shift: ShiftConfig = field(default_factory=ShiftConfig)
    seed: int = 0

    def validate(self) -> None:
        if self.n_source < 1:
            raise ConfigError(f"n_source must be >= 1, got {self.n_source}")
        if self.n_target < 1:
            raise ConfigError(f"n_target must be >= 1, got {self.n_target}")
        if len(self.grid_size) != 3:
            raise ConfigError(f"grid_size must have 3 entries, got {self.grid_size}")
        if any(g < 16 for g in self.grid_size):
            raise ConfigError(f"grid_size entries must be >= 16, got {self.grid_size}")
        if self.channels < 1:
            raise ConfigError(f"channels must be >= 1, got {self.channels}")
        self.shift.validate()
        # The worst-case core semi-axis must still contain a lattice point
        # (>= sqrt(3)/2 voxels), otherwise lesions can degenerate to empty
        # label maps.
        if _core_radius_floor(self) < 0.87:
            raise ConfigError(
                f"grid_size {self.grid_size} with shift.size_scale_target "
                f"{self.shift.size_scale_target} leaves no room for a minimal lesion core"
            )


# Relative lesion geometry (fractions of the smallest grid axis).
_CORE_RADIUS_RANGE = (0.10, 0.16)
_RING_FACTOR = 1.45  # outer radius of the enhancing ring, relative to the core
_HALO_FACTOR = 2.1  # outer radius of the edema halo, relative to the core
_BRAIN_FRACTION = 0.44

# Per-domain background texture: correlation length of the smoothed noise.
# This is a fixed design constant, not a shift parameter: it guarantees the
# domains are separable even in lesion-free patches.
_TEXTURE_SIGMA = {DomainLabel.SOURCE: 0.6, DomainLabel.TARGET: 1.4}
_TEXTURE_STD = 0.10
_VOXEL_NOISE_STD = 0.02

# Correlation length of the target gain field as a fraction of the smallest
# axis: a few voxels at typical grids. Fine-grained structure gives the field
# many degrees of freedom inside one training patch, which background texture
# cannot mimic (a patch-constant or near-linear gain is largely removed by
# per-case z-scoring plus the first instance-norm layer).
_BIAS_SIGMA_FRACTION = 0.04

# Added contrast of each lesion compartment per channel (cycled when
# channels > 4). Source domain uses these as-is; the target domain maps each
# delta d to intensity_scale*d + intensity_offset.
_CORE_DELTAS = (0.9, 0.55, 0.75, 0.6)
_RING_DELTAS = (1.3, 0.9, 1.1, 1.0)
_HALO_DELTAS = (0.5, 0.35, 0.45, 0.4)
_TISSUE_BASE = (1.0, 0.9, 1.1, 0.95)


def _core_radius_floor(cfg: SyntheticConfig) -> float:
    scale = min(1.0, cfg.shift.size_scale_target)
    return _CORE_RADIUS_RANGE[0] * min(cfg.grid_size) * scale * 0.8


def _ellipsoid(shape, center, radii) -> np.ndarray:
    grids = np.ogrid[tuple(slice(0, s) for s in shape)]
    acc = np.zeros(shape, dtype=np.float64)
    for g, c, r in zip(grids, center, radii):
        acc = acc + ((g - c) / r) ** 2
    return acc <= 1.0


def _cycle(table, c):
    return table[c % len(table)]


def _make_case(case_id: str, domain: DomainLabel, cfg: SyntheticConfig, rng: np.random.Generator) -> Case:
    shape = tuple(cfg.grid_size)
    min_axis = min(shape)
    shift = cfg.shift
    is_target = domain is DomainLabel.TARGET

    brain_center = np.array(shape) / 2.0 + rng.uniform(-1.5, 1.5, size=3)
    brain_radii = _BRAIN_FRACTION * np.array(shape) * rng.uniform(0.93, 1.0, size=3)
    brain = _ellipsoid(shape, brain_center, brain_radii)

    size_scale = shift.size_scale_target if is_target else 1.0
    core_r = rng.uniform(*_CORE_RADIUS_RANGE) * min_axis * size_scale
    aniso = rng.uniform(0.8, 1.2, size=3)
    core_radii = core_r * aniso
    # Keep the full halo inside the brain so labels never cross the boundary.
    max_extent = core_r * _HALO_FACTOR * 1.2
    lo = brain_center - brain_radii + max_extent
    hi = brain_center + brain_radii - max_extent
    if np.any(hi <= lo):
        raise DataError(
            f"case {case_id}: grid {shape} too small to contain a minimal lesion"
        )
    lesion_center = rng.uniform(lo, hi)

    has_ring = rng.random() < (
        shift.enhancing_ring_probability_target if is_target else shift.enhancing_ring_probability_source
    )
    has_halo = rng.random() < (
        shift.edema_probability_target if is_target else shift.edema_probability_source
    )

    ring_outer = _ellipsoid(shape, lesion_center, core_radii * _RING_FACTOR) & brain
    core = _ellipsoid(shape, lesion_center, core_radii) & brain
    labels = np.zeros(shape, dtype=np.uint8)
    if has_halo:
        halo = _ellipsoid(shape, lesion_center, core_radii * _HALO_FACTOR) & brain
        labels[halo] = LABEL_EDEMA
    if has_ring:
        labels[ring_outer] = LABEL_ENHANCING
        labels[core] = LABEL_NONENHANCING
    else:
        # No enhancement: the whole core region is nonenhancing tissue.
        labels[ring_outer] = LABEL_NONENHANCING

    sigma = _TEXTURE_SIGMA[domain]
    contrast_jitter = rng.uniform(0.9, 1.1)
    gain = None
    if is_target and shift.bias_field_strength_target > 0:
        bias = gaussian_filter(rng.standard_normal(shape), sigma=min_axis * _BIAS_SIGMA_FRACTION)
        bias /= max(bias[brain].std(), 1e-12)
        # Log-normal gain: strength is the typical log-modulation, and the
        # field stays positive everywhere.
        gain = np.exp(shift.bias_field_strength_target * bias)
    volume = np.zeros((cfg.channels, *shape), dtype=np.float32)
    for c in range(cfg.channels):
        texture = gaussian_filter(rng.standard_normal(shape), sigma=sigma)
        inside_std = texture[brain].std()
        texture *= _TEXTURE_STD / max(inside_std, 1e-12)
        chan = _cycle(_TISSUE_BASE, c) + texture + _VOXEL_NOISE_STD * rng.standard_normal(shape)

        for mask_code, table in (
            (LABEL_NONENHANCING, _CORE_DELTAS),
            (LABEL_ENHANCING, _RING_DELTAS),
            (LABEL_EDEMA, _HALO_DELTAS),
        ):
            delta = _cycle(table, c) * contrast_jitter
            if is_target:
                delta = shift.intensity_scale * delta + shift.intensity_offset
            chan[labels == mask_code] += delta

        if gain is not None:
            chan *= gain
        chan[~brain] = 0.0
        volume[c] = chan.astype(np.float32)

    case = Case(id=case_id, volume=volume, labels=LabelMap(grid=labels), domain=domain)
    case.validate()
    return case


def generate_synthetic(cfg: SyntheticConfig) -> tuple[list[Case], list[Case]]:
    """Generate (source_cases, target_cases); pure function of (cfg, cfg.seed)."""
    cfg.validate()
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_source + cfg.n_target)
    source = [
        _make_case(f"src_{i:04d}", DomainLabel.SOURCE, cfg, np.random.default_rng(seeds[i]))
        for i in range(cfg.n_source)
    ]
    target = [
        _make_case(
            f"tgt_{i:04d}",
            DomainLabel.TARGET,
            cfg,
            np.random.default_rng(seeds[cfg.n_source + i]),
        )
        for i in range(cfg.n_target)
    ]
    return source, target
