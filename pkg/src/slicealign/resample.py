"""Sample a 3D volume on a transformed 2D slice grid.

Every slice pixel is mapped pixel -> world -> voxel and interpolated
from the volume. A pixel is valid when its continuous voxel coordinate
lies inside [0, n-1] on every axis (with a 1e-9 guard so planes that
coincide with a voxel grid stay fully valid under float roundoff);
invalid pixels carry the fill value 0. Single-plane sampling only: no
slice-profile (thickness) integration.
"""
from __future__ import annotations

import numpy as np

from .errors import SingularAffine
from .geometry import RigidTransform, SlicePose
from .images import Mask2D, ResampledSlice, Volume

_EDGE_TOL = 1e-9

METHODS = ("trilinear", "nearest")


def voxel_grid_coords(v: Volume, pose: SlicePose, t: RigidTransform) -> np.ndarray:
    """Continuous voxel coordinates of every slice pixel, shape (cols, rows, 3)."""
    try:
        inv = np.linalg.inv(v.affine)
    except np.linalg.LinAlgError as e:
        raise SingularAffine(str(e)) from None
    full = inv @ t.matrix @ pose.affine
    ii, jj = np.meshgrid(np.arange(pose.cols, dtype=float),
                         np.arange(pose.rows, dtype=float), indexing="ij")
    q = (full[:3, 0][None, None, :] * ii[..., None]
         + full[:3, 1][None, None, :] * jj[..., None]
         + full[:3, 3][None, None, :])
    return q


def inside_mask(v: Volume, coords: np.ndarray) -> Mask2D:
    """True where a continuous voxel coordinate lies within the volume grid."""
    n = np.array(v.shape, dtype=float)
    return np.all((coords >= -_EDGE_TOL) & (coords <= n - 1 + _EDGE_TOL), axis=-1)


def _gather(data: np.ndarray, i, j, k) -> np.ndarray:
    return data[i.ravel(), j.ravel(), k.ravel()].reshape(i.shape)


def resample_on_slice(v: Volume, pose: SlicePose, t: RigidTransform,
                      method: str = "trilinear") -> ResampledSlice:
    """Resample the volume on the slice grid posed by ``t.matrix @ pose.affine``.

    method "trilinear" blends the 8 surrounding voxels; "nearest" rounds
    half-up per axis. Both agree exactly at grid nodes.
    """
    if method not in METHODS:
        raise ValueError(f"unknown interpolation method {method!r}")
    coords = voxel_grid_coords(v, pose, t)
    valid = inside_mask(v, coords)
    n = np.array(v.shape)
    # Clamp into the grid so out-of-volume pixels index safely; their
    # values are discarded through the valid mask below.
    q = np.clip(coords, 0.0, (n - 1).astype(float))

    data = v.data
    if method == "nearest":
        idx = np.floor(q + 0.5).astype(int)
        idx = np.minimum(idx, n - 1)
        values = _gather(data, idx[..., 0], idx[..., 1], idx[..., 2])
    else:
        base = np.floor(q).astype(int)
        base = np.minimum(base, np.maximum(n - 2, 0))    # degenerate axes: n == 1
        frac = q - base
        i0, j0, k0 = base[..., 0], base[..., 1], base[..., 2]
        step = (n > 1).astype(int)
        i1, j1, k1 = i0 + step[0], j0 + step[1], k0 + step[2]
        fx, fy, fz = frac[..., 0], frac[..., 1], frac[..., 2]
        values = (
            _gather(data, i0, j0, k0) * (1 - fx) * (1 - fy) * (1 - fz)
            + _gather(data, i1, j0, k0) * fx * (1 - fy) * (1 - fz)
            + _gather(data, i0, j1, k0) * (1 - fx) * fy * (1 - fz)
            + _gather(data, i0, j0, k1) * (1 - fx) * (1 - fy) * fz
            + _gather(data, i1, j1, k0) * fx * fy * (1 - fz)
            + _gather(data, i1, j0, k1) * fx * (1 - fy) * fz
            + _gather(data, i0, j1, k1) * (1 - fx) * fy * fz
            + _gather(data, i1, j1, k1) * fx * fy * fz
        )
    values = np.where(valid, values, 0.0).astype(np.float32)
    return ResampledSlice(values=values, valid=valid)


def binarize(r: ResampledSlice, threshold: float) -> Mask2D:
    """Foreground mask of a resampled label: valid pixels at or above threshold."""
    return r.valid & (r.values >= threshold)
