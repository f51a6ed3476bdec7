"""Minimal NIfTI-1 reader/writer.

Covers the subset this package needs: single-file .nii / .nii.gz volumes,
3D or 4D, common scalar dtypes, voxel spacing from pixdim, optional
scl_slope/scl_inter scaling. Orientation metadata is not interpreted; data
are returned in on-disk (Fortran) axis order.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .cases import DataError

_HDR_SIZE = 348
_VOX_OFFSET = 352.0

# NIfTI-1 datatype codes -> numpy dtypes.
_DTYPES = {
    2: np.uint8,
    4: np.int16,
    8: np.int32,
    16: np.float32,
    64: np.float64,
    256: np.int8,
    512: np.uint16,
    768: np.uint32,
}
_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}


def _open(path: Path, mode: str):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def read_nifti(path: str | Path) -> tuple[np.ndarray, tuple[float, ...]]:
    """Read a NIfTI-1 file; returns (array, spacing).

    The array keeps the file's dimensionality (3D or 4D); spacing has one
    entry per spatial axis.
    """
    path = Path(path)
    with _open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HDR_SIZE:
        raise DataError(f"{path}: truncated NIfTI header ({len(raw)} bytes)")

    sizeof_hdr = struct.unpack_from("<i", raw, 0)[0]
    if sizeof_hdr == _HDR_SIZE:
        bo = "<"
    elif struct.unpack_from(">i", raw, 0)[0] == _HDR_SIZE:
        bo = ">"
    else:
        raise DataError(f"{path}: not a NIfTI-1 file (sizeof_hdr={sizeof_hdr})")

    magic = raw[344:348]
    if magic[:3] not in (b"n+1", b"ni1"):
        raise DataError(f"{path}: bad NIfTI magic {magic!r}")

    dim = struct.unpack_from(bo + "8h", raw, 40)
    ndim = dim[0]
    if ndim < 3 or ndim > 4:
        raise DataError(f"{path}: unsupported dimensionality {ndim}")
    shape = tuple(dim[1 : 1 + ndim])

    datatype = struct.unpack_from(bo + "h", raw, 70)[0]
    if datatype not in _DTYPES:
        raise DataError(f"{path}: unsupported NIfTI datatype code {datatype}")
    dtype = np.dtype(_DTYPES[datatype]).newbyteorder(bo)

    pixdim = struct.unpack_from(bo + "8f", raw, 76)
    spacing = tuple(float(abs(p)) if p != 0 else 1.0 for p in pixdim[1:4])

    vox_offset = struct.unpack_from(bo + "f", raw, 108)[0]
    offset = int(vox_offset) if vox_offset >= _HDR_SIZE else int(_VOX_OFFSET)

    count = int(np.prod(shape))
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    array = data.reshape(shape, order="F")

    scl_slope, scl_inter = struct.unpack_from(bo + "2f", raw, 112)
    if scl_slope not in (0.0, 1.0) or scl_inter != 0.0:
        array = array.astype(np.float32) * (scl_slope or 1.0) + scl_inter
    else:
        array = np.ascontiguousarray(array.astype(dtype.newbyteorder("=")))
    return array, spacing


def write_nifti(path: str | Path, array: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> None:
    """Write a 3D or 4D array as a single-file NIfTI-1 volume."""
    path = Path(path)
    array = np.asarray(array)
    if array.ndim not in (3, 4):
        raise DataError(f"{path}: only 3D/4D arrays supported, got ndim={array.ndim}")
    dtype = np.dtype(array.dtype).newbyteorder("=")
    if dtype not in _CODES:
        raise DataError(f"{path}: dtype {array.dtype} has no NIfTI-1 code here")

    hdr = bytearray(_HDR_SIZE)
    struct.pack_into("<i", hdr, 0, _HDR_SIZE)
    dim = [array.ndim, *array.shape] + [1] * (7 - array.ndim)
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<h", hdr, 70, _CODES[dtype])
    struct.pack_into("<h", hdr, 72, dtype.itemsize * 8)
    pixdim = [1.0, *[float(s) for s in spacing], 1.0] + [1.0] * (7 - 1 - len(spacing))
    struct.pack_into("<8f", hdr, 76, *pixdim[:8])
    struct.pack_into("<f", hdr, 108, _VOX_OFFSET)
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)  # scl_slope, scl_inter
    hdr[344:348] = b"n+1\x00"

    body = array.astype(dtype.newbyteorder("<")).tobytes(order="F")
    with _open(path, "wb") as fh:
        fh.write(bytes(hdr))
        fh.write(b"\x00" * 4)  # pad to vox_offset 352
        fh.write(body)
