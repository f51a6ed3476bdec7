"""Patch sampling and the two batch streams."""

import numpy as np
import pytest

from adaptseg.data import (
    CANONICAL_LEGEND,
    Case,
    ConfigError,
    DataError,
    DomainLabel,
    LabelMap,
    balanced_batch_stream,
    epoch_length,
    sample_patch,
    supervised_batch_stream,
)

from conftest import make_case


def lesion_case(case_id="les", shape=(20, 20, 20), lesion_voxels=((10, 10, 10),),
                domain=DomainLabel.SOURCE, seed=0):
    rng = np.random.default_rng(seed)
    volume = rng.normal(size=(2, *shape)).astype(np.float32)
    grid = np.zeros(shape, dtype=np.uint8)
    for v in lesion_voxels:
        grid[v] = 1
    return Case(id=case_id, volume=volume,
                labels=LabelMap(grid=grid, legend=CANONICAL_LEGEND),
                domain=domain, spacing=(1.0, 1.0, 1.0))


def test_epoch_length_formula():
    assert epoch_length(200, 60, 4) == 100
    assert epoch_length(60, 200, 4) == 100
    assert epoch_length(5, 3, 4) == 3  # ceil(10/4)
    assert epoch_length(1, 1, 2) == 1


def test_forced_foreground_centers_on_the_lesion_voxel():
    case = lesion_case(lesion_voxels=((13, 7, 9),))
    for trial in range(20):
        patch, target = sample_patch(case, (8, 8, 8), np.random.default_rng(trial),
                                     foreground_bias=1.0)
        # center voxel of the patch is the lesion voxel
        assert target[4, 4, 4] == 1
        assert patch.shape == (2, 8, 8, 8)


def test_foreground_bias_monte_carlo():
    case = lesion_case(lesion_voxels=((10, 10, 10),))
    rng = np.random.default_rng(99)
    hits = 0
    n = 10000
    for _ in range(n):
        _, target = sample_patch(case, (4, 4, 4), rng, foreground_bias=0.33)
        hits += int(target[2, 2, 2] == 1)
    # Uniform draws almost never land the center exactly on the single lesion
    # voxel, so the hit fraction estimates the bias itself.
    assert hits / n == pytest.approx(0.33, abs=0.02)


def test_zero_bias_never_reads_foreground_and_stays_in_bounds():
    case = lesion_case(shape=(12, 12, 12), lesion_voxels=((1, 1, 1),))
    rng = np.random.default_rng(5)
    for _ in range(200):
        patch, target = sample_patch(case, (8, 8, 8), rng, foreground_bias=0.0)
        assert patch.shape == (2, 8, 8, 8)
        assert target.shape == (8, 8, 8)


def test_patch_larger_than_volume_is_zero_padded():
    case = lesion_case(shape=(6, 6, 6), lesion_voxels=((3, 3, 3),))
    patch, target = sample_patch(case, (8, 8, 8), np.random.default_rng(0),
                                 foreground_bias=0.0)
    assert patch.shape == (2, 8, 8, 8)
    # 6^3 of real voxels inside an 8^3 patch: the pad ring must be zero
    assert (patch != 0).sum() <= 2 * 6 * 6 * 6


def test_overhanging_centered_patch_is_zero_padded():
    case = lesion_case(shape=(10, 10, 10), lesion_voxels=((0, 0, 0),))
    patch, target = sample_patch(case, (8, 8, 8), np.random.default_rng(1),
                                 foreground_bias=1.0)
    assert target[4, 4, 4] == 1
    # half the patch hangs off the volume on each axis
    assert np.all(patch[:, :4, :, :] == 0)


def test_with_target_false_reads_no_labels():
    from adaptseg.data import LabelAccessError, guard_labels

    case = guard_labels(lesion_case(domain=DomainLabel.TARGET))
    patch, target = sample_patch(case, (8, 8, 8), np.random.default_rng(0),
                                 foreground_bias=0.5, with_target=False)
    assert target is None
    with pytest.raises(LabelAccessError):
        sample_patch(case, (8, 8, 8), np.random.default_rng(0),
                     foreground_bias=0.5, with_target=True)


def test_bad_bias_rejected():
    with pytest.raises(ConfigError):
        sample_patch(lesion_case(), (4, 4, 4), np.random.default_rng(0), foreground_bias=1.5)


def test_balanced_batches_structure(small_synth):
    source, target = small_synth
    stream = balanced_batch_stream(source, target, 4, np.random.default_rng(0),
                                   patch_size=(8, 8, 8))
    for _ in range(30):
        batch = next(stream)
        assert batch.patches.shape == (4, 4, 8, 8, 8)
        assert batch.seg_targets.shape == (4, 3, 8, 8, 8)
        assert batch.source_mask.tolist() == [True, True, False, False]
        assert batch.domain_onehot[:2].tolist() == [[1.0, 0.0], [1.0, 0.0]]
        assert batch.domain_onehot[2:].tolist() == [[0.0, 1.0], [0.0, 1.0]]
        # target rows carry no annotation payload
        assert np.all(batch.seg_targets[2:] == 0)
        assert len(batch.case_ids) == 4


def test_balanced_stream_deterministic(small_synth):
    source, target = small_synth
    a = balanced_batch_stream(source, target, 4, np.random.default_rng(7), patch_size=(8, 8, 8))
    b = balanced_batch_stream(source, target, 4, np.random.default_rng(7), patch_size=(8, 8, 8))
    for _ in range(10):
        ba, bb = next(a), next(b)
        np.testing.assert_array_equal(ba.patches, bb.patches)
        assert ba.case_ids == bb.case_ids


def test_balanced_stream_covers_larger_domain(small_synth):
    source, target = small_synth  # 6 source, 4 target
    stream = balanced_batch_stream(source, target, 4, np.random.default_rng(3),
                                   patch_size=(8, 8, 8))
    n_epoch = epoch_length(len(source), len(target), 4)
    seen = set()
    for _ in range(n_epoch * 5):
        seen.update(next(stream).case_ids)
    assert {c.id for c in source} <= seen
    assert {c.id for c in target} <= seen


def test_balanced_stream_single_target_case(small_synth):
    source, target = small_synth
    stream = balanced_batch_stream(source, target[:1], 4, np.random.default_rng(0),
                                   patch_size=(8, 8, 8))
    batch = next(stream)
    assert batch.case_ids[2] == batch.case_ids[3] == target[0].id


def test_balanced_stream_rejects_odd_batch(small_synth):
    source, target = small_synth
    with pytest.raises(ConfigError):
        balanced_batch_stream(source, target, 3, np.random.default_rng(0), patch_size=(8, 8, 8))


def test_balanced_stream_rejects_empty_domain(small_synth):
    source, _ = small_synth
    with pytest.raises(DataError):
        balanced_batch_stream(source, [], 4, np.random.default_rng(0), patch_size=(8, 8, 8))


def test_supervised_stream_requires_labels(small_synth):
    source, _ = small_synth
    unlabeled = Case(id="u0", volume=source[0].volume, labels=None,
                     domain=DomainLabel.SOURCE, spacing=source[0].spacing)
    with pytest.raises(DataError):
        supervised_batch_stream([unlabeled], 2, np.random.default_rng(0), patch_size=(8, 8, 8))


def test_supervised_stream_structure(small_synth):
    source, _ = small_synth
    stream = supervised_batch_stream(source, 2, np.random.default_rng(0), patch_size=(8, 8, 8))
    batch = next(stream)
    assert batch.patches.shape == (2, 4, 8, 8, 8)
    assert batch.source_mask.tolist() == [True, True]
    # every case appears exactly once per cycle of permutations
    ids = []
    n_per_epoch = -(-len(source) * 1 // 2)
    for _ in range(len(source) * 3 // 2 - 1):  # 3 epochs of 2-case batches
        ids.extend(next(stream).case_ids)
    counts = {cid: ids.count(cid) for cid in {c.id for c in source}}
    assert max(counts.values()) - min(counts.values()) <= 1
