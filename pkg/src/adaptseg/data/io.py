"""Dataset ingestion: BraTS-style NIfTI folders and the raw+JSON container."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cases import CANONICAL_LEGEND, LABEL_ENHANCING, Case, DataError, DomainLabel, LabelMap
from .nifti import read_nifti, write_nifti

# Fixed channel order for the BraTS-style layout.
BRATS_MODALITIES = ("t1", "t1ce", "t2", "flair")
BRATS_SEG_NAME = "seg"
BRATS_SHAPE = (240, 240, 155)

# External label conventions map the enhancing class to 4 in older releases.
_EXTERNAL_REMAP = {4: LABEL_ENHANCING}


def _center_crop(array: np.ndarray, shape: tuple[int, int, int], what: str) -> np.ndarray:
    if tuple(array.shape) == shape:
        return array
    if any(a < s for a, s in zip(array.shape, shape)):
        raise DataError(f"{what}: shape {array.shape} smaller than declared {shape}")
    slices = tuple(
        slice((a - s) // 2, (a - s) // 2 + s) for a, s in zip(array.shape, shape)
    )
    return array[slices]


def _remap_labels(grid: np.ndarray, what: str) -> np.ndarray:
    grid = grid.astype(np.uint8, copy=True)
    for ext, canon in _EXTERNAL_REMAP.items():
        grid[grid == ext] = canon
    unknown = [int(v) for v in np.unique(grid) if int(v) not in CANONICAL_LEGEND]
    if unknown:
        raise DataError(f"{what}: unknown label value(s) {unknown}")
    return grid


def _load_brats_case(
    case_dir: Path,
    domain: DomainLabel,
    modalities: tuple[str, ...],
    declared_shape: tuple[int, int, int],
) -> Case:
    arrays = []
    spacing = None
    for mod in modalities:
        f = case_dir / f"{mod}.nii.gz"
        if not f.exists():
            f = case_dir / f"{mod}.nii"
        if not f.exists():
            raise DataError(f"case {case_dir.name}: missing modality file {case_dir / (mod + '.nii.gz')}")
        arr, sp = read_nifti(f)
        if arr.ndim != 3:
            raise DataError(f"{f}: expected a 3D modality volume, got shape {arr.shape}")
        arr = _center_crop(arr, declared_shape, str(f))
        if arrays and arr.shape != arrays[0].shape:
            raise DataError(
                f"case {case_dir.name}: modality shape mismatch {arr.shape} vs {arrays[0].shape}"
            )
        arrays.append(arr.astype(np.float32))
        spacing = spacing or sp

    labels = None
    seg = case_dir / f"{BRATS_SEG_NAME}.nii.gz"
    if not seg.exists():
        seg = case_dir / f"{BRATS_SEG_NAME}.nii"
    if seg.exists():
        grid, _ = read_nifti(seg)
        grid = _center_crop(np.asarray(grid), declared_shape, str(seg))
        labels = LabelMap(grid=_remap_labels(grid, str(seg)))

    case = Case(
        id=case_dir.name,
        volume=np.stack(arrays),
        labels=labels,
        domain=domain,
        spacing=tuple(float(s) for s in spacing),
    )
    case.validate()
    return case


def _load_container_case(case_dir: Path) -> Case:
    meta_path = case_dir / "meta.json"
    if not meta_path.exists():
        raise DataError(f"case {case_dir.name}: missing {meta_path}")
    meta = json.loads(meta_path.read_text())
    shape = tuple(meta["shape"])
    vol_path = case_dir / "volume.raw"
    if not vol_path.exists():
        raise DataError(f"case {case_dir.name}: missing {vol_path}")
    volume = np.fromfile(vol_path, dtype="<f4").reshape(shape).astype(np.float32)

    labels = None
    lab_path = case_dir / "labels.raw"
    if lab_path.exists():
        grid = np.fromfile(lab_path, dtype=np.uint8).reshape(shape[1:])
        legend = {int(k): v for k, v in meta["legend"].items()}
        labels = LabelMap(grid=grid, legend=legend)

    case = Case(
        id=meta["id"],
        volume=volume,
        labels=labels,
        domain=DomainLabel(meta["domain"]),
        spacing=tuple(meta["spacing"]),
    )
    case.validate()
    return case


def load_dataset(
    root_dir: str | Path,
    layout: str,
    domain: DomainLabel = DomainLabel.SOURCE,
    modalities: tuple[str, ...] = BRATS_MODALITIES,
    declared_shape: tuple[int, int, int] = BRATS_SHAPE,
) -> list[Case]:
    """Load every case folder under ``root_dir``, ordered lexicographically by id.

    ``layout`` is "brats_nifti" or "synthetic_container". For the NIfTI layout
    ``domain`` tags all loaded cases (the layout itself carries no domain
    information); the container layout stores the domain per case.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise DataError(f"dataset root {root} does not exist")
    case_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not case_dirs:
        raise DataError(f"dataset root {root} contains no case folders")

    if layout == "brats_nifti":
        return [_load_brats_case(d, domain, modalities, declared_shape) for d in case_dirs]
    if layout == "synthetic_container":
        return [_load_container_case(d) for d in case_dirs]
    raise DataError(f"unknown layout '{layout}' (expected brats_nifti or synthetic_container)")


def write_synthetic_dataset(cases: list[Case], root_dir: str | Path) -> None:
    """Write cases in the raw+JSON container layout (bit-exact round trip)."""
    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)
    for case in cases:
        d = root / case.id
        d.mkdir(exist_ok=True)
        case.volume.astype("<f4").tofile(d / "volume.raw")
        meta = {
            "id": case.id,
            "shape": list(case.volume.shape),
            "spacing": list(case.spacing),
            "domain": case.domain.value,
            "legend": {str(k): v for k, v in (case.labels.legend if case.labels else CANONICAL_LEGEND).items()},
        }
        (d / "meta.json").write_text(json.dumps(meta, indent=1))
        if case.labels is not None:
            case.labels.grid.astype(np.uint8).tofile(d / "labels.raw")


def write_brats_case(case: Case, root_dir: str | Path, modalities: tuple[str, ...] = BRATS_MODALITIES) -> None:
    """Write a case in the BraTS-style NIfTI layout (mainly for fixtures)."""
    d = Path(root_dir) / case.id
    d.mkdir(parents=True, exist_ok=True)
    if case.volume.shape[0] != len(modalities):
        raise DataError(
            f"case {case.id}: {case.volume.shape[0]} channels but {len(modalities)} modality names"
        )
    for c, mod in enumerate(modalities):
        write_nifti(d / f"{mod}.nii.gz", case.volume[c], case.spacing)
    if case.labels is not None:
        write_nifti(d / "seg.nii.gz", case.labels.grid.astype(np.uint8), case.spacing)
