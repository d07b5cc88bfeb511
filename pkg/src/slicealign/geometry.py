"""Rigid transform algebra and pixel/world/voxel coordinate mappings.

Coordinate conventions:

  World frame ("patient"): static RAS+ millimeter space — X grows to the
  patient's right, Y anteriorly, Z superiorly. All transforms are 4x4
  homogeneous maps acting on world points.

  Slice frame: the dynamic frame spanned by a slice's in-plane axes u, v
  and plane normal n, derived from the slice pose composed with the
  current rigid transform.

  Pixel index (i, j): i runs along the in-plane u axis (0..cols-1),
  j along v (0..rows-1). A slice pose maps (i, j, 0, 1) to world mm.

A rigid transform is parameterised by three translations (mm), three
rotations (degrees, extrinsic Z*Y*X composition) and a fixed rotation
center. The matrix is the canonical representation; parameters are a
derived view, so repeated edits never accumulate Euler re-composition
drift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePose, InvalidParameter, InvalidTransform

_ORTHO_TOL = 1e-9
_GIMBAL_TOL = 1e-9


@dataclass(frozen=True)
class WorldPoint:
    """A point in RAS+ world space, millimeters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise InvalidParameter(f"non-finite world point ({self.x}, {self.y}, {self.z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, a) -> "WorldPoint":
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class RigidParams:
    """Six rigid degrees of freedom plus the rotation center they refer to.

    Translations in mm, rotations in degrees about the fixed center
    (cx, cy, cz). Decomposition output is normalised to (-180, 180] per
    angle with |ry| <= 90.
    """

    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    cz: float = 0.0

    def __post_init__(self):
        vals = (self.tx, self.ty, self.tz, self.rx, self.ry, self.rz,
                self.cx, self.cy, self.cz)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameter(f"non-finite rigid parameters {vals}")

    def center(self) -> WorldPoint:
        return WorldPoint(self.cx, self.cy, self.cz)

    def as_tuple(self):
        return (self.tx, self.ty, self.tz, self.rx, self.ry, self.rz,
                self.cx, self.cy, self.cz)


@dataclass(frozen=True)
class RigidTransform:
    """4x4 world-to-world rigid map with the center used for decomposition."""

    matrix: np.ndarray
    center: WorldPoint

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise InvalidTransform(f"expected 4x4 matrix, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidTransform("non-finite matrix")
        r = m[:3, :3]
        if np.max(np.abs(r.T @ r - np.eye(3))) > _ORTHO_TOL:
            raise InvalidTransform("rotation block is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise InvalidTransform("rotation block is not proper (det != +1)")
        if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > _ORTHO_TOL:
            raise InvalidTransform("last row must be (0, 0, 0, 1)")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, center: WorldPoint | None = None) -> "RigidTransform":
        return cls(np.eye(4), center or WorldPoint(0.0, 0.0, 0.0))

    def apply(self, point: WorldPoint) -> WorldPoint:
        h = self.matrix @ np.array([point.x, point.y, point.z, 1.0])
        return WorldPoint.from_array(h[:3])


@dataclass(frozen=True)
class SlicePose:
    """Static pixel-to-world map of a 2D slice.

    ``affine`` maps homogeneous pixel indices (i, j, 0, 1) to world mm;
    its first two columns span the plane (they must be mutually
    orthogonal), the third is the plane normal scaled by the nominal
    slice thickness. ``cols`` counts pixels along i, ``rows`` along j.
    """

    affine: np.ndarray
    rows: int
    cols: int
    spacing_u: float
    spacing_v: float

    def __post_init__(self):
        a = np.array(self.affine, dtype=float)
        if a.shape != (4, 4) or not np.all(np.isfinite(a)):
            raise DegeneratePose("pose affine must be a finite 4x4 matrix")
        cu, cv = a[:3, 0], a[:3, 1]
        nu, nv = np.linalg.norm(cu), np.linalg.norm(cv)
        if nu == 0.0 or nv == 0.0:
            raise DegeneratePose("pose has a zero-length in-plane axis")
        if abs(float(cu @ cv)) / (nu * nv) > 1e-6:
            raise DegeneratePose("pose in-plane axes are not orthogonal")
        a.flags.writeable = False
        object.__setattr__(self, "affine", a)

    @classmethod
    def from_affine(cls, affine, rows: int, cols: int) -> "SlicePose":
        a = np.asarray(affine, dtype=float)
        return cls(affine=a, rows=rows, cols=cols,
                   spacing_u=float(np.linalg.norm(a[:3, 0])),
                   spacing_v=float(np.linalg.norm(a[:3, 1])))

    def grid_center_pixel(self) -> tuple[float, float]:
        return ((self.cols - 1) / 2.0, (self.rows - 1) / 2.0)


# -- elementary matrices -----------------------------------------------------

def _trans(v) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = v
    return m


def _rot_axis(axis: np.ndarray, degrees: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis, as a 4x4 matrix."""
    k = np.asarray(axis, dtype=float)
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    kx = np.array([[0.0, -k[2], k[1]],
                   [k[2], 0.0, -k[0]],
                   [-k[1], k[0], 0.0]])
    r3 = c * np.eye(3) + s * kx + (1.0 - c) * np.outer(k, k)
    m = np.eye(4)
    m[:3, :3] = r3
    return m


_EX = np.array([1.0, 0.0, 0.0])
_EY = np.array([0.0, 1.0, 0.0])
_EZ = np.array([0.0, 0.0, 1.0])
_WORLD_AXES = {"x": _EX, "y": _EY, "z": _EZ}


# -- operations ----------------------------------------------------------------

def rigid_to_matrix(p: RigidParams) -> RigidTransform:
    """Compose parameters into a matrix: T(t) * T(c) * Rz * Ry * Rx * T(-c)."""
    rot = _rot_axis(_EZ, p.rz) @ _rot_axis(_EY, p.ry) @ _rot_axis(_EX, p.rx)
    c = np.array([p.cx, p.cy, p.cz])
    m = _trans([p.tx, p.ty, p.tz]) @ _trans(c) @ rot @ _trans(-c)
    return RigidTransform(matrix=m, center=p.center())


def matrix_to_rigid(m: RigidTransform) -> RigidParams:
    """Decompose a rigid matrix into parameters about the transform's center.

    Extrinsic Z*Y*X Euler extraction; on gimbal lock (|cos ry| below
    1e-9) rx is set to 0 and the remaining spin folds into rz.
    """
    r = m.matrix[:3, :3]
    sy = -float(r[2, 0])
    ry = math.asin(min(1.0, max(-1.0, sy)))
    if abs(math.cos(ry)) < _GIMBAL_TOL:
        rx = 0.0
        if sy > 0:
            rz = math.atan2(-float(r[0, 1]), float(r[0, 2]))
        else:
            rz = math.atan2(-float(r[0, 1]), -float(r[0, 2]))
    else:
        rx = math.atan2(float(r[2, 1]), float(r[2, 2]))
        rz = math.atan2(float(r[1, 0]), float(r[0, 0]))
    c = m.center.as_array()
    t = m.matrix[:3, 3] - c + r @ c
    return RigidParams(tx=float(t[0]), ty=float(t[1]), tz=float(t[2]),
                       rx=math.degrees(rx), ry=math.degrees(ry), rz=math.degrees(rz),
                       cx=float(c[0]), cy=float(c[1]), cz=float(c[2]))


def invert(m: RigidTransform) -> RigidTransform:
    """Closed-form rigid inverse; the decomposition center is preserved."""
    r = m.matrix[:3, :3]
    inv = np.eye(4)
    inv[:3, :3] = r.T
    inv[:3, 3] = -r.T @ m.matrix[:3, 3]
    return RigidTransform(matrix=inv, center=m.center)


def slice_axes(pose: SlicePose, t: RigidTransform) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit in-plane axes u, v and normal n of the current (transformed) pose.

    n is u x v, so the triplet is always right-handed regardless of the
    sign of the pose's stored third column.
    """
    eff = t.matrix @ pose.affine
    cu, cv = eff[:3, 0], eff[:3, 1]
    nu, nv = np.linalg.norm(cu), np.linalg.norm(cv)
    if nu == 0.0 or nv == 0.0:
        raise DegeneratePose("effective pose has a zero-length axis")
    u = cu / nu
    v = cv / nv
    n = np.cross(u, v)
    nn = np.linalg.norm(n)
    if nn == 0.0:
        raise DegeneratePose("effective pose axes are collinear")
    return u, v, n / nn


def pixel_to_world(pose: SlicePose, t: RigidTransform, i: float, j: float) -> WorldPoint:
    """World position of continuous pixel coordinate (i, j); extrapolation allowed."""
    h = t.matrix @ pose.affine @ np.array([i, j, 0.0, 1.0])
    return WorldPoint.from_array(h[:3])


def slice_center_world(pose: SlicePose, t: RigidTransform) -> WorldPoint:
    """World image of the slice's pixel-grid center under the current transform."""
    ci, cj = pose.grid_center_pixel()
    return pixel_to_world(pose, t, ci, cj)


def apply_increment(current: RigidTransform, kind: str, frame: str, axis: str,
                    amount: float, pose: SlicePose) -> RigidTransform:
    """Apply one keyboard/button step on top of the current transform.

    kind is "translation" (amount in mm) or "rotation" (degrees); frame
    selects the static world axes ("patient", axis x/y/z) or the current
    slice axes ("slice", axis u/v/n). Rotations pivot about the current
    (transformed) slice center so the slice spins in place. The result
    is re-normalised through the parameter decomposition to keep the
    rotation block orthonormal under long edit sequences.
    """
    if not math.isfinite(amount):
        raise InvalidParameter(f"non-finite increment amount {amount}")
    if frame == "patient":
        try:
            direction = _WORLD_AXES[axis]
        except KeyError:
            raise InvalidParameter(f"unknown patient axis {axis!r}") from None
    elif frame == "slice":
        u, v, n = slice_axes(pose, current)
        try:
            direction = {"u": u, "v": v, "n": n}[axis]
        except KeyError:
            raise InvalidParameter(f"unknown slice axis {axis!r}") from None
    else:
        raise InvalidParameter(f"unknown frame {frame!r}")

    if kind == "translation":
        new = _trans(amount * direction) @ current.matrix
    elif kind == "rotation":
        pivot = slice_center_world(pose, current).as_array()
        new = _trans(pivot) @ _rot_axis(direction, amount) @ _trans(-pivot) @ current.matrix
    else:
        raise InvalidParameter(f"unknown increment kind {kind!r}")

    return rigid_to_matrix(matrix_to_rigid(RigidTransform(matrix=new, center=current.center)))
