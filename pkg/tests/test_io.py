import numpy as np
import pytest

from adaptseg.data import (
    CANONICAL_LEGEND,
    Case,
    DataError,
    DomainLabel,
    LabelMap,
    load_dataset,
    write_brats_case,
    write_synthetic_dataset,
)
from adaptseg.data.nifti import write_nifti

from conftest import make_case


def brats_fixture_case(case_id="brats_000", shape=(24, 24, 20), seed=0, with_seg=True):
    rng = np.random.default_rng(seed)
    volume = rng.normal(size=(4, *shape)).astype(np.float32)
    labels = None
    if with_seg:
        grid = np.zeros(shape, dtype=np.uint8)
        grid[8:12, 8:12, 8:12] = 1
        grid[9:11, 9:11, 9:11] = 4  # external enhancing convention
        labels = LabelMap(grid=grid, legend=CANONICAL_LEGEND)
    return Case(id=case_id, volume=volume, labels=labels,
                domain=DomainLabel.SOURCE, spacing=(1.0, 1.0, 1.0))


def test_container_roundtrip_bit_exact(tmp_path, small_synth):
    source, _ = small_synth
    write_synthetic_dataset(source, tmp_path / "src")
    loaded = load_dataset(tmp_path / "src", layout="synthetic_container")
    assert [c.id for c in loaded] == sorted(c.id for c in source)
    by_id = {c.id: c for c in source}
    for c in loaded:
        orig = by_id[c.id]
        assert c.volume.tobytes() == orig.volume.tobytes()
        assert c.labels.grid.tobytes() == orig.labels.grid.tobytes()
        assert c.domain == orig.domain
        assert c.spacing == orig.spacing


def test_brats_layout_roundtrip_with_remap(tmp_path):
    case = brats_fixture_case()
    write_brats_case(case, tmp_path)
    # write_brats_case stores the raw grid; inject the external "4" convention
    loaded = load_dataset(tmp_path, layout="brats_nifti",
                          domain=DomainLabel.TARGET, declared_shape=(24, 24, 20))
    assert len(loaded) == 1
    got = loaded[0]
    assert got.domain is DomainLabel.TARGET
    assert got.volume.shape == (4, 24, 24, 20)
    np.testing.assert_allclose(got.volume, case.volume, atol=1e-6)
    # the external enhancing value 4 must come back as canonical 3
    assert set(np.unique(got.labels.grid).tolist()) == {0, 1, 3}
    assert (got.labels.grid == 3).sum() == 8


def test_brats_case_without_seg_loads_unlabeled(tmp_path):
    case = brats_fixture_case(with_seg=False)
    write_brats_case(case, tmp_path)
    loaded = load_dataset(tmp_path, layout="brats_nifti", declared_shape=(24, 24, 20))
    assert loaded[0].labels is None


def test_missing_modality_is_fatal_and_names_file(tmp_path):
    case = brats_fixture_case()
    write_brats_case(case, tmp_path)
    (tmp_path / case.id / "t2.nii.gz").unlink()
    with pytest.raises(DataError, match="t2"):
        load_dataset(tmp_path, layout="brats_nifti", declared_shape=(24, 24, 20))


def test_unknown_label_value_is_fatal(tmp_path):
    case = brats_fixture_case()
    grid = case.labels.grid.copy()
    grid[0, 0, 0] = 7
    bad = Case(id=case.id, volume=case.volume, labels=LabelMap(grid=grid),
               domain=case.domain, spacing=case.spacing)
    write_brats_case(bad, tmp_path)
    with pytest.raises(DataError, match="7"):
        load_dataset(tmp_path, layout="brats_nifti", declared_shape=(24, 24, 20))


def test_oversized_volume_is_center_cropped(tmp_path):
    rng = np.random.default_rng(3)
    big = rng.normal(size=(28, 26, 24)).astype(np.float32)
    d = tmp_path / "case_a"
    d.mkdir()
    for mod in ("t1", "t1ce", "t2", "flair"):
        write_nifti(d / f"{mod}.nii.gz", big, (1, 1, 1))
    loaded = load_dataset(tmp_path, layout="brats_nifti", declared_shape=(24, 24, 20))
    assert loaded[0].volume.shape == (4, 24, 24, 20)
    np.testing.assert_array_equal(loaded[0].volume[0], big[2:26, 1:25, 2:22])


def test_undersized_volume_is_fatal(tmp_path):
    d = tmp_path / "case_b"
    d.mkdir()
    small = np.zeros((10, 10, 10), dtype=np.float32)
    small[0, 0, 0] = 1.0
    for mod in ("t1", "t1ce", "t2", "flair"):
        write_nifti(d / f"{mod}.nii.gz", small, (1, 1, 1))
    with pytest.raises(DataError, match="smaller"):
        load_dataset(tmp_path, layout="brats_nifti", declared_shape=(24, 24, 20))


def test_empty_root_is_fatal(tmp_path):
    with pytest.raises(DataError):
        load_dataset(tmp_path, layout="synthetic_container")
    with pytest.raises(DataError):
        load_dataset(tmp_path / "nope", layout="synthetic_container")


def test_unlabeled_container_case(tmp_path):
    case = make_case("plain", channels=2)
    unlabeled = Case(id=case.id, volume=case.volume, labels=None,
                     domain=DomainLabel.TARGET, spacing=case.spacing)
    write_synthetic_dataset([unlabeled], tmp_path)
    loaded = load_dataset(tmp_path, layout="synthetic_container")
    assert loaded[0].labels is None
    assert loaded[0].domain is DomainLabel.TARGET
