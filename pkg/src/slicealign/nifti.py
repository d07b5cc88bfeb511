"""NIfTI-1 reading/writing and the rigid-transform CSV format.

Only the fixed-size NIfTI-1 header (348 bytes) is supported, optionally
inside a gzip container selected by a ``.gz`` suffix. Pixel data is cast
to float32 on read; the affine comes from the sform when set, falling
back to the qform and finally to a diagonal pixdim matrix. Writes are
atomic (temp file + rename) and gzip members are stamped with mtime 0 so
identical content produces identical bytes.

Transform CSV schema (one row per slice, 9-decimal fixed formatting)::

    case_id,slice_id,tx_mm,ty_mm,tz_mm,rx_deg,ry_deg,rz_deg,cx_mm,cy_mm,cz_mm

Angles are degrees; the rotation center columns make each row a complete,
tool-independent description of the transform.
"""
from __future__ import annotations

import gzip
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from .errors import CorruptHeader, IoError, MalformedCsv, UnsupportedDatatype
from .geometry import RigidParams, RigidTransform, SlicePose
from .images import ResampledSlice, SliceImage, Volume

HEADER_SIZE = 348
_HDR_FMT = "i10s18sihcc8h3fhhhh8ffffhccffffii80s24shh6f4f4f4f16s4s"

_DTYPES = {2: "u1", 4: "i2", 8: "i4", 16: "f4", 64: "f8"}
_DTYPE_CODES = {np.dtype(np.uint8): (2, 8), np.dtype(np.float32): (16, 32)}

CSV_HEADER = "case_id,slice_id,tx_mm,ty_mm,tz_mm,rx_deg,ry_deg,rz_deg,cx_mm,cy_mm,cz_mm"


def _read_bytes(path: Path) -> bytes:
    try:
        if path.name.endswith(".gz"):
            with gzip.open(path, "rb") as f:
                return f.read()
        return path.read_bytes()
    except (OSError, EOFError, gzip.BadGzipFile) as e:
        raise IoError(f"cannot read {path}: {e}") from e


def _quaternion_affine(b: float, c: float, d: float, qfac: float,
                       spacing: np.ndarray, offset: np.ndarray) -> np.ndarray:
    a2 = 1.0 - (b * b + c * c + d * d)
    a = np.sqrt(max(a2, 0.0))
    r = np.array([
        [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
        [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
        [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
    ])
    m = np.eye(4)
    m[:3, :3] = r * spacing
    m[:3, 2] *= qfac
    m[:3, 3] = offset
    return m


def read_nifti(path) -> Union[Volume, SliceImage]:
    """Load a NIfTI-1 file as a Volume (nz > 1) or SliceImage (nz == 1).

    Raises CorruptHeader for malformed headers, UnsupportedDatatype for
    datatypes or dimensionalities outside the supported set, IoError for
    filesystem problems.
    """
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < HEADER_SIZE:
        raise CorruptHeader(f"{path}: file shorter than the {HEADER_SIZE}-byte header")

    for endian in ("<", ">"):
        if struct.unpack_from(endian + "i", raw, 0)[0] == HEADER_SIZE:
            break
    else:
        raise CorruptHeader(f"{path}: sizeof_hdr is not {HEADER_SIZE} in either byte order")

    fields = struct.unpack_from(endian + _HDR_FMT, raw, 0)
    dim = fields[7:15]
    datatype = fields[19]
    pixdim = np.array(fields[22:30], dtype=float)
    vox_offset = float(fields[30])
    scl_slope, scl_inter = float(fields[31]), float(fields[32])
    qform_code, sform_code = fields[44], fields[45]
    quat = fields[46:52]
    srow = np.array(fields[52:64], dtype=float).reshape(3, 4)
    magic = fields[65]

    if magic not in (b"n+1\x00", b"ni1\x00"):
        raise CorruptHeader(f"{path}: bad magic {magic!r}")

    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise CorruptHeader(f"{path}: dim[0] = {ndim} out of range")
    shape = [max(1, int(dim[k])) for k in range(1, ndim + 1)]
    if len(shape) < 2:
        raise UnsupportedDatatype(f"{path}: 1D images are not supported")
    if any(s != 1 for s in shape[3:]):
        raise UnsupportedDatatype(f"{path}: 4D/time-series images are not supported")
    nx, ny = shape[0], shape[1]
    nz = shape[2] if len(shape) >= 3 else 1

    if datatype not in _DTYPES:
        raise UnsupportedDatatype(f"{path}: datatype code {datatype} not supported")
    dtype = np.dtype(endian + _DTYPES[datatype])

    if magic == b"ni1\x00":
        raw_data = _read_bytes(path.with_name(path.name.replace(".hdr", ".img")))
        offset = max(int(vox_offset), 0)
    else:
        raw_data, offset = raw, int(vox_offset) if vox_offset > 0 else HEADER_SIZE + 4

    count = nx * ny * nz
    end = offset + count * dtype.itemsize
    if end > len(raw_data):
        raise CorruptHeader(f"{path}: data section truncated ({len(raw_data)} < {end} bytes)")
    arr = np.frombuffer(raw_data, dtype=dtype, count=count, offset=offset)
    arr = arr.reshape((nx, ny, nz), order="F").astype(np.float32)
    if np.isfinite(scl_slope) and scl_slope not in (0.0, 1.0):
        arr = arr * np.float32(scl_slope) + np.float32(scl_inter)
    elif np.isfinite(scl_inter) and scl_inter != 0.0 and scl_slope != 0.0:
        arr = arr + np.float32(scl_inter)

    spacing = np.abs(pixdim[1:4])
    spacing[spacing == 0] = 1.0
    if sform_code > 0:
        affine = np.eye(4)
        affine[:3, :] = srow
    elif qform_code > 0:
        qfac = -1.0 if pixdim[0] < 0 else 1.0
        affine = _quaternion_affine(*quat[:3], qfac, spacing, np.array(quat[3:6]))
    else:
        affine = np.diag([spacing[0], spacing[1], spacing[2], 1.0])

    stem = path.name
    for suffix in (".gz", ".nii", ".hdr", ".img"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]

    if nz == 1:
        pose = SlicePose.from_affine(affine, rows=ny, cols=nx)
        return SliceImage(data=arr[:, :, 0], pose=pose, id=stem)
    return Volume(data=arr, affine=affine, kind="intensity")


def _pack_header(shape3: tuple[int, int, int], affine: np.ndarray, dtype: np.dtype) -> bytes:
    code, bitpix = _DTYPE_CODES[np.dtype(dtype)]
    # derive pixdim from the affine exactly as it will be stored (float32),
    # so writing a re-read file reproduces the original bytes
    affine = np.asarray(affine, dtype=np.float32).astype(float)
    spacing = np.linalg.norm(affine[:3, :3], axis=0)
    dim = [3, shape3[0], shape3[1], shape3[2], 1, 1, 1, 1]
    pixdim = [1.0, float(spacing[0]), float(spacing[1]), float(spacing[2]), 0, 0, 0, 0]
    return struct.pack(
        "<" + _HDR_FMT,
        HEADER_SIZE, b"", b"", 0, 0, b"\x00", b"\x00",
        *dim,
        0.0, 0.0, 0.0, 0, code, bitpix, 0,
        *pixdim,
        352.0, 1.0, 0.0, 0, b"\x00", b"\x0a",   # vox_offset, scl, slice_end/code, mm|sec units
        0.0, 0.0, 0.0, 0.0, 0, 0, b"", b"",
        0, 1,                                    # qform_code = 0, sform_code = 1 (aligned)
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        *[float(x) for x in affine[0, :]],
        *[float(x) for x in affine[1, :]],
        *[float(x) for x in affine[2, :]],
        b"", b"n+1\x00",
    )


def _atomic_write(path: Path, payload: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                if path.name.endswith(".gz"):
                    # mtime=0 keeps repeated saves byte-identical
                    with gzip.GzipFile(filename="", mode="wb", fileobj=f, mtime=0) as gz:
                        gz.write(payload)
                else:
                    f.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_nifti_array(data3: np.ndarray, affine: np.ndarray, path, dtype=None) -> None:
    """Write a (nx, ny, nz) array with the given voxel-to-world affine.

    dtype defaults to uint8 when every value is 0 or 1, float32 otherwise.
    """
    path = Path(path)
    data3 = np.asarray(data3)
    if dtype is None:
        dtype = np.uint8 if np.isin(data3, (0.0, 1.0)).all() else np.float32
    body = _pack_header(data3.shape, np.asarray(affine, dtype=float), np.dtype(dtype))
    body += b"\x00\x00\x00\x00"  # no header extensions
    body += np.ascontiguousarray(data3.astype(dtype).ravel(order="F")).tobytes()
    _atomic_write(path, body)


def write_nifti(img: ResampledSlice, pose: SlicePose, t: RigidTransform, path) -> None:
    """Save a resampled 2D label with its post-registration geometry.

    The stored sform is the effective pose ``t.matrix @ pose.affine`` so
    the file carries the annotated position, not the raw acquisition one.
    """
    effective = t.matrix @ pose.affine
    write_nifti_array(img.values[:, :, None], effective, path)


def write_slice_nifti(img: SliceImage, path) -> None:
    """Save a 2D slice at its stored (untransformed) pose as float32."""
    write_nifti_array(img.data[:, :, None], img.pose.affine, path, dtype=np.float32)


def write_volume_nifti(v: Volume, path, dtype=None) -> None:
    """Save a 3D volume; labels collapse to uint8 when binary."""
    write_nifti_array(v.data, v.affine, path, dtype=dtype)


# -- transform CSV -------------------------------------------------------------

def _format_row(case_id: str, slice_id: str, p: RigidParams) -> str:
    nums = ",".join(f"{v:.9f}" for v in p.as_tuple())
    return f"{case_id},{slice_id},{nums}"


def write_transform_csv(case_id: str, entries, path) -> None:
    """Write one CSV row per (slice_id, RigidParams) pair; slice ids must be unique."""
    ids = [sid for sid, _ in entries]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate slice ids in CSV entries: {ids}")
    lines = [CSV_HEADER]
    lines.extend(_format_row(case_id, sid, p) for sid, p in entries)
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode("ascii"))


def read_transform_csv(path) -> list[tuple[str, str, RigidParams]]:
    """Parse a transform CSV into (case_id, slice_id, RigidParams) rows."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise MalformedCsv(f"{path}: expected header {CSV_HEADER!r}")
    rows = []
    for k, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 11:
            raise MalformedCsv(f"{path}:{k}: expected 11 columns, got {len(parts)}")
        try:
            nums = [float(x) for x in parts[2:]]
        except ValueError as e:
            raise MalformedCsv(f"{path}:{k}: {e}") from None
        rows.append((parts[0], parts[1], RigidParams(*nums)))
    return rows
