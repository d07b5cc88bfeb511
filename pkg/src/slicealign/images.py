"""Core image value types: 3D volumes, 2D slices, masks, resampled planes.

All pixel data is held as 32-bit float regardless of the on-disk type;
label volumes keep exact integer values representable in float32. Voxel
index order (i, j, k) follows the file's native order and the affine is
the single source of orientation truth. Instances are immutable after
construction and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import ShapeMismatch, SingularAffine
from .geometry import SlicePose, WorldPoint

VOLUME_KINDS = ("intensity", "binary_label", "categorical_label")

# Masks are plain boolean arrays with the same shape as their parent image.
Mask2D = np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Volume:
    """3D scalar grid plus its voxel-to-world affine."""

    data: np.ndarray            # (nx, ny, nz) float32
    affine: np.ndarray          # 4x4 voxel index -> world mm
    kind: str = "intensity"

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if d.ndim != 3:
            raise ShapeMismatch(f"volume data must be 3D, got shape {d.shape}")
        a = np.array(self.affine, dtype=float)
        if a.shape != (4, 4):
            raise ShapeMismatch(f"volume affine must be 4x4, got {a.shape}")
        if abs(np.linalg.det(a[:3, :3])) <= 1e-12:
            raise SingularAffine("volume affine 3x3 block is singular")
        if self.kind not in VOLUME_KINDS:
            raise ValueError(f"unknown volume kind {self.kind!r}")
        object.__setattr__(self, "data", _freeze(d.copy() if d is self.data else d))
        object.__setattr__(self, "affine", _freeze(a))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_kind(self, kind: str) -> "Volume":
        return replace(self, kind=kind)


@dataclass(frozen=True)
class SliceImage:
    """2D scalar grid with its static pixel-to-world pose.

    data has shape (cols, rows): axis 0 runs along the in-plane u axis,
    matching the pixel index (i, j) the pose affine maps to world.
    """

    data: np.ndarray            # (cols, rows) float32
    pose: SlicePose
    id: str

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if d.ndim != 2:
            raise ShapeMismatch(f"slice data must be 2D, got shape {d.shape}")
        if d.shape != (self.pose.cols, self.pose.rows):
            raise ShapeMismatch(
                f"slice data shape {d.shape} does not match pose (cols, rows) "
                f"({self.pose.cols}, {self.pose.rows})")
        object.__setattr__(self, "data", _freeze(d.copy() if d is self.data else d))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_id(self, slice_id: str) -> "SliceImage":
        return replace(self, id=slice_id)


@dataclass(frozen=True)
class ResampledSlice:
    """Values sampled from a volume on a slice grid, with their validity mask.

    valid is True where the sample point fell inside the volume; values
    outside carry the fill value 0.
    """

    values: np.ndarray          # (cols, rows) float32
    valid: Mask2D               # (cols, rows) bool

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        m = np.asarray(self.valid, dtype=bool)
        if v.shape != m.shape:
            raise ShapeMismatch(f"values {v.shape} and valid {m.shape} differ in shape")
        object.__setattr__(self, "values", _freeze(v.copy() if v is self.values else v))
        object.__setattr__(self, "valid", _freeze(m.copy() if m is self.valid else m))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def preprocess(raw: Union[Volume, SliceImage]) -> Union[Volume, SliceImage]:
    """Replace NaN pixels by 0, leaving every finite value untouched."""
    data = np.asarray(raw.data)
    if not np.isnan(data).any():
        return raw
    cleaned = np.nan_to_num(data, nan=0.0, posinf=np.inf, neginf=-np.inf)
    if isinstance(raw, Volume):
        return Volume(data=cleaned, affine=raw.affine, kind=raw.kind)
    return SliceImage(data=cleaned, pose=raw.pose, id=raw.id)


def world_to_voxel(v: Volume, p: WorldPoint) -> np.ndarray:
    """Continuous voxel coordinates of a world point (inverse affine)."""
    return world_to_voxel_many(v, p.as_array()[None, :])[0]


def world_to_voxel_many(v: Volume, points: np.ndarray) -> np.ndarray:
    """Vectorised inverse affine: (n, 3) world mm -> (n, 3) voxel coords."""
    try:
        inv = np.linalg.inv(v.affine)
    except np.linalg.LinAlgError as e:
        raise SingularAffine(str(e)) from None
    pts = np.asarray(points, dtype=float)
    return pts @ inv[:3, :3].T + inv[:3, 3]
