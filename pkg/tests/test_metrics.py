"""Overlap and surface-distance metrics, checked against brute-force oracles
that share no code with the implementations."""

import numpy as np
import pytest

from adaptseg.data import CANONICAL_LEGEND, LabelMap
from adaptseg.eval import (
    HD95_SENTINEL,
    MetricsRecord,
    boundary_voxels,
    dice_score,
    evaluate_cases,
    filter_small_et,
    hd95,
    read_metrics_csv,
    write_metrics_csv,
)

from conftest import make_case


# --- oracles ---------------------------------------------------------------

def dice_oracle(a, b):
    inter = int(np.logical_and(a, b).sum())
    sa, sb = int(a.sum()), int(b.sum())
    if sa + sb == 0:
        return 1.0
    return 2.0 * inter / (sa + sb)


def boundary_oracle(mask):
    """A voxel is boundary when any of its 6 face neighbors (or the outside
    of the array) is background."""
    out = np.zeros_like(mask, dtype=bool)
    idx = np.argwhere(mask)
    shape = mask.shape
    for p in idx:
        for ax in range(3):
            for step in (-1, 1):
                q = p.copy()
                q[ax] += step
                if not (0 <= q[ax] < shape[ax]) or not mask[tuple(q)]:
                    out[tuple(p)] = True
                    break
            else:
                continue
            break
    return out


def hd95_oracle(a, b, spacing=(1.0, 1.0, 1.0)):
    """All-pairs distances between boundary voxel coordinates."""
    if not a.any() and not b.any():
        return 0.0
    if not a.any() or not b.any():
        return HD95_SENTINEL
    pa = np.argwhere(boundary_oracle(a)).astype(float) * np.asarray(spacing)
    pb = np.argwhere(boundary_oracle(b)).astype(float) * np.asarray(spacing)
    d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(-1))
    d_ab = np.percentile(d.min(axis=1), 95)
    d_ba = np.percentile(d.min(axis=0), 95)
    return max(d_ab, d_ba)


def random_blob(rng, shape=(12, 12, 12), p=0.5):
    mask = np.zeros(shape, dtype=bool)
    n = rng.integers(1, 4)
    for _ in range(n):
        c = rng.uniform(2, np.array(shape) - 2)
        r = rng.uniform(1.0, 4.0, size=3)
        grids = np.ogrid[tuple(slice(0, s) for s in shape)]
        acc = sum(((g - ci) / ri) ** 2 for g, ci, ri in zip(grids, c, r))
        mask |= acc <= 1.0
    return mask


# --- dice ------------------------------------------------------------------

def test_dice_matches_counting_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.random((10, 10, 10)) < 0.3
        b = rng.random((10, 10, 10)) < 0.3
        assert dice_score(a, b) == dice_oracle(a, b)


def test_dice_conventions():
    z = np.zeros((4, 4, 4), dtype=bool)
    o = np.ones((4, 4, 4), dtype=bool)
    assert dice_score(z, z) == 1.0
    assert dice_score(z, o) == 0.0
    assert dice_score(o, o) == 1.0


def test_dice_shape_mismatch_fatal():
    with pytest.raises(ValueError):
        dice_score(np.zeros((4, 4, 4), bool), np.zeros((5, 4, 4), bool))


# --- boundary + hd95 --------------------------------------------------------

def test_boundary_matches_neighbor_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        mask = random_blob(rng)
        np.testing.assert_array_equal(boundary_voxels(mask), boundary_oracle(mask))


def test_boundary_of_full_array_is_shell():
    mask = np.ones((4, 5, 6), dtype=bool)
    bd = boundary_voxels(mask)
    inner = np.zeros_like(mask)
    inner[1:-1, 1:-1, 1:-1] = True
    np.testing.assert_array_equal(bd, ~inner)


def test_hd95_matches_brute_force_on_random_blobs():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(40):
        a, b = random_blob(rng), random_blob(rng)
        got = hd95(a, b)
        want = hd95_oracle(a, b)
        worst = max(worst, abs(got - want))
    assert worst <= 1e-6


def test_hd95_anisotropic_spacing():
    rng = np.random.default_rng(3)
    spacing = (2.0, 1.0, 0.5)
    for _ in range(15):
        a, b = random_blob(rng), random_blob(rng)
        assert hd95(a, b, spacing=spacing) == pytest.approx(
            hd95_oracle(a, b, spacing), abs=1e-6
        )


def test_hd95_single_voxel_offset():
    a = np.zeros((8, 8, 8), dtype=bool)
    b = np.zeros((8, 8, 8), dtype=bool)
    a[2, 4, 4] = True
    b[5, 4, 4] = True
    assert hd95(a, b) == pytest.approx(3.0, abs=1e-12)


def test_hd95_identical_masks_is_zero():
    m = random_blob(np.random.default_rng(4))
    assert hd95(m, m) == 0.0


def test_hd95_symmetry():
    rng = np.random.default_rng(5)
    a, b = random_blob(rng), random_blob(rng)
    assert hd95(a, b) == pytest.approx(hd95(b, a), abs=1e-9)


def test_hd95_translation_consistency():
    base = np.zeros((16, 16, 16), dtype=bool)
    base[4:8, 4:8, 4:8] = True
    shifted = np.roll(base, 2, axis=1)
    assert hd95(base, shifted) == pytest.approx(2.0, abs=1e-9)


def test_hd95_empty_conventions():
    z = np.zeros((6, 6, 6), dtype=bool)
    m = np.zeros((6, 6, 6), dtype=bool)
    m[3, 3, 3] = True
    assert hd95(z, z) == 0.0
    assert hd95(z, m) == HD95_SENTINEL
    assert hd95(m, z) == HD95_SENTINEL
    assert HD95_SENTINEL == 373.13


# --- case-level evaluation ---------------------------------------------------

def test_evaluate_cases_produces_three_rows_per_case():
    rng = np.random.default_rng(6)
    refs, preds = {}, {}
    for i in range(5):
        grid = rng.integers(0, 4, size=(8, 8, 8)).astype(np.uint8)
        refs[f"c{i}"] = LabelMap(grid=grid, legend=CANONICAL_LEGEND)
        preds[f"c{i}"] = LabelMap(grid=grid.copy(), legend=CANONICAL_LEGEND)
    records = evaluate_cases(preds, refs, model_tag="perfect", fold=0)
    assert len(records) == 15
    assert all(r.dice == 1.0 for r in records)
    assert all(r.hd95 == 0.0 for r in records)
    assert {r.region for r in records} == {"WT", "TC", "ET"}
    assert all(r.model_tag == "perfect" for r in records)


def test_evaluate_cases_scripted_error():
    from adaptseg.eval import RegionMasks

    grid = np.zeros((8, 8, 8), dtype=np.uint8)
    grid[2:6, 2:6, 2:6] = 1  # TC cube (also WT)
    pred_tc = np.zeros((8, 8, 8), dtype=bool)
    pred_tc[2:6, 2:6, 2:5] = True  # drop one z-slab
    pred = RegionMasks(wt=pred_tc, tc=pred_tc, et=np.zeros_like(pred_tc))
    records = evaluate_cases({"c0": pred}, {"c0": LabelMap(grid=grid)},
                             model_tag="m", fold=0)
    by_region = {r.region: r for r in records}
    ref = grid > 0
    assert by_region["TC"].dice == pytest.approx(dice_oracle(pred_tc, ref))
    assert by_region["TC"].hd95 == pytest.approx(hd95_oracle(pred_tc, ref), abs=1e-6)
    # ET empty in both reference and prediction
    assert by_region["ET"].dice == 1.0
    assert by_region["ET"].hd95 == 0.0


def test_evaluate_cases_missing_prediction_fatal():
    refs = {"c0": LabelMap(grid=np.zeros((8, 8, 8), dtype=np.uint8))}
    with pytest.raises(ValueError, match="c0"):
        evaluate_cases({}, refs, model_tag="m", fold=0)


def test_evaluate_cases_per_case_spacing():
    m = np.zeros((8, 8, 8), dtype=bool)
    m[2, 4, 4] = True
    n = np.zeros((8, 8, 8), dtype=bool)
    n[5, 4, 4] = True
    from adaptseg.eval import RegionMasks

    pred = RegionMasks(wt=m, tc=m, et=m)
    ref = RegionMasks(wt=n, tc=n, et=n)
    records = evaluate_cases({"c0": pred}, {"c0": ref}, spacing={"c0": (2.0, 1.0, 1.0)})
    assert records[0].hd95 == pytest.approx(6.0, abs=1e-9)


def _grid_with_et(n):
    grid = np.zeros((10, 10, 10), dtype=np.uint8)
    grid.flat[:n] = 3
    return LabelMap(grid=grid, legend=CANONICAL_LEGEND)


def test_filter_small_et_boundary():
    refs = {"small": _grid_with_et(59), "big": _grid_with_et(60)}
    kept = filter_small_et(["small", "big"], refs, threshold=60)
    assert kept == ["big"]


def test_filter_small_et_accepts_case_objects():
    case = make_case("c0")
    grid = np.zeros((16, 16, 16), dtype=np.uint8)
    grid.flat[:61] = 3
    refs = {"c0": LabelMap(grid=grid, legend=CANONICAL_LEGEND)}
    assert filter_small_et([case], refs, threshold=60) == [case]
    assert filter_small_et([case], refs, threshold=62) == []


def test_filter_small_et_scripted_cohort():
    rng = np.random.default_rng(7)
    sizes = rng.integers(0, 200, size=99)
    refs = {f"c{i:02d}": _grid_with_et(int(n)) for i, n in enumerate(sizes)}
    kept = filter_small_et(sorted(refs), refs, threshold=60)
    assert len(kept) == int((sizes >= 60).sum())


def test_metrics_csv_roundtrip(tmp_path):
    records = [
        MetricsRecord("m", 0, "c0", "WT", 0.123456789012345, 3.0),
        MetricsRecord("m", 1, "c1", "ET", 1.0, HD95_SENTINEL),
    ]
    path = tmp_path / "metrics.csv"
    write_metrics_csv(records, path)
    back = read_metrics_csv(path)
    assert back == records
