"""Synthetic dataset generation for end-to-end testing and benchmarks.

A phantom case is a smooth, textured intensity volume with an ellipsoid
binary label, a handful of axial slices extracted from the volume by
trilinear resampling, and matching ground-truth 2D labels. Misalignment
is injected by composing a rigid transform onto each slice's stored
header pose while the pixel data keeps its true origin, mirroring real
acquisitions whose headers are wrong; the exact inverse of the injected
transform is therefore the perfect annotation. Everything is seeded and
byte-reproducible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import (RigidParams, RigidTransform, SlicePose, rigid_to_matrix,
                       slice_center_world)
from .images import Volume
from .nifti import write_nifti_array, write_transform_csv
from .resample import binarize, resample_on_slice

CONFIG_DOC = {
    "dataset_root": ".",
    "volume_pattern": r"(?P<case_id>[^/]+)/volume\.nii\.gz",
    "label3d_pattern": r"(?P<case_id>[^/]+)/label3d\.nii\.gz",
    "slice_pattern": r"(?P<case_id>[^/]+)/slices/(?P<slice_id>[^/]+)\.nii\.gz",
    "output_transform_template": "out/{case_id}/transforms.csv",
    "output_label_template": "out/{case_id}/{slice_id}_label.nii.gz",
    "label_kind": "binary",
    "binarization_threshold": 0.5,
}


@dataclass(frozen=True)
class PhantomCase:
    case_id: str
    root: Path
    config_path: Path
    slice_ids: tuple[str, ...]
    true_transforms: tuple[RigidParams, ...]   # injected header misalignments
    gt_label_paths: tuple[Path, ...]
    true_csv_path: Path


def _texture(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Smooth seeded texture: a few random low-frequency cosine waves."""
    out = np.zeros(points.shape[0])
    for _ in range(4):
        freq = rng.uniform(0.05, 0.25, size=3)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        amp = rng.uniform(8.0, 16.0)
        out += amp * np.cos(points @ freq + phase)
    return out


def _intensity(points: np.ndarray, center: np.ndarray, semi_axes: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    rho2 = (((points - center) / semi_axes) ** 2).sum(axis=1)
    return 100.0 + 120.0 * np.exp(-rho2) + _texture(points, rng)


def _ellipsoid(points: np.ndarray, center: np.ndarray, semi_axes: np.ndarray) -> np.ndarray:
    rho2 = (((points - center) / semi_axes) ** 2).sum(axis=1)
    return (rho2 <= 1.0).astype(np.float32)


def axial_pose(z_mm: float, cols: int, rows: int, pixel_spacing: float,
               thickness: float) -> SlicePose:
    """Axial slice plane centered on the world origin at height z."""
    affine = np.array([
        [pixel_spacing, 0.0, 0.0, -(cols - 1) / 2.0 * pixel_spacing],
        [0.0, pixel_spacing, 0.0, -(rows - 1) / 2.0 * pixel_spacing],
        [0.0, 0.0, thickness, z_mm],
        [0.0, 0.0, 0.0, 1.0],
    ])
    return SlicePose.from_affine(affine, rows=rows, cols=cols)


def make_phantom(root, case_id: str, size, ellipsoid, slice_poses, true_transforms,
                 seed: int = 0) -> PhantomCase:
    """Write one synthetic case (volume, 3D label, slices, GT labels, config).

    size is the cubic voxel count or an (nx, ny, nz, spacing_mm) tuple;
    ellipsoid is (center_mm, semi_axes_mm). slice_poses are (slice_id,
    SlicePose) pairs giving each slice's TRUE plane; true_transforms are
    the rigid misalignments baked into the stored headers (identity
    params mean the header is correct).
    """
    root = Path(root)
    case_dir = root / case_id
    if isinstance(size, int):
        nx = ny = nz = size
        spacing = 2.0
    else:
        nx, ny, nz, spacing = size
    center_mm, semi_axes = (np.asarray(v, dtype=float) for v in ellipsoid)

    # volume grid centered on the world origin
    origin = -np.array([(nx - 1), (ny - 1), (nz - 1)]) / 2.0 * spacing
    affine = np.diag([spacing, spacing, spacing, 1.0])
    affine[:3, 3] = origin

    ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    idx = np.stack([ii, jj, kk], axis=-1).reshape(-1, 3).astype(float)
    points = idx @ affine[:3, :3].T + affine[:3, 3]

    rng = np.random.default_rng(seed)
    intensity = _intensity(points, center_mm, semi_axes, rng).reshape(nx, ny, nz)
    label = _ellipsoid(points, center_mm, semi_axes).reshape(nx, ny, nz)

    volume = Volume(data=intensity.astype(np.float32), affine=affine)
    label3d = Volume(data=label, affine=affine, kind="binary_label")
    write_nifti_array(volume.data, affine, case_dir / "volume.nii.gz", dtype=np.float32)
    write_nifti_array(label3d.data, affine, case_dir / "label3d.nii.gz")

    identity = RigidTransform.identity()
    slice_ids, gt_paths, csv_entries = [], [], []
    for (slice_id, pose), params in zip(slice_poses, true_transforms):
        extracted = resample_on_slice(volume, pose, identity, "trilinear")
        gt_mask = binarize(resample_on_slice(label3d, pose, identity, "trilinear"), 0.5)

        misalign = rigid_to_matrix(params)
        stored_affine = misalign.matrix @ pose.affine
        write_nifti_array(extracted.values[:, :, None], stored_affine,
                          case_dir / "slices" / f"{slice_id}.nii.gz", dtype=np.float32)
        gt_path = case_dir / "gt_labels" / f"{slice_id}.nii.gz"
        write_nifti_array(gt_mask.astype(np.float32)[:, :, None], pose.affine, gt_path)

        slice_ids.append(slice_id)
        gt_paths.append(gt_path)
        csv_entries.append((slice_id, params))

    config_path = root / "config.json"
    config_path.parent.mkdir(parents=True, exist_ok=True)
    config_path.write_text(json.dumps(CONFIG_DOC, indent=2) + "\n", encoding="utf-8")
    true_csv = case_dir / "true_transforms.csv"
    write_transform_csv(case_id, csv_entries, true_csv)

    return PhantomCase(case_id=case_id, root=root, config_path=config_path,
                       slice_ids=tuple(slice_ids), true_transforms=tuple(true_transforms),
                       gt_label_paths=tuple(gt_paths), true_csv_path=true_csv)


def build_phantom_case(root, case_id: str = "case01", *, size: int = 32,
                       n_slices: int = 3, slice_size: int = 24,
                       sigma_t: float = 0.0, sigma_r: float = 0.0,
                       seed: int = 0) -> PhantomCase:
    """Convenience wrapper: axial slices through the ellipsoid plus optional
    seeded Gaussian misalignment of the stored headers.

    True slice grids coincide with volume voxel centers, so ground-truth
    labels interpolate to exactly 0 or 1 and a recovered annotation is
    never a knife-edge call at the binarization threshold. The injected
    misalignment still makes the working (header) poses fully oblique.
    All header values are exactly representable in float32.
    """
    from .harness import inject_noise

    semi_axes = (20.0, 16.0, 14.0)
    # odd-integer z positions sit on voxel planes (2 mm grid centered on 0),
    # kept near the ellipsoid equator so perturbed planes still intersect it
    steps = np.round(np.linspace(-2, 2, n_slices)).astype(int) if n_slices > 1 else [0]
    poses = [(f"s{k + 1:02d}", axial_pose(float(2 * m + 1), slice_size, slice_size, 2.0, 8.0))
             for k, m in enumerate(steps)]

    base = []
    for _, pose in poses:
        c = slice_center_world(pose, RigidTransform.identity())
        base.append(RigidParams(cx=c.x, cy=c.y, cz=c.z))
    if sigma_t > 0.0 or sigma_r > 0.0:
        stds = (sigma_t,) * 3 + (sigma_r,) * 3
        transforms = inject_noise(base, stds, seed=seed)
    else:
        transforms = base

    # off-grid ellipsoid center keeps boundary interpolation values generic
    return make_phantom(root, case_id, size, ((0.3, -0.2, 0.45), semi_axes), poses,
                        transforms, seed=seed)
