"""Binary masks restricting evaluation and display.

The positive mask is static for a slice's lifetime; the overlap mask
depends on the current transform and is recomputed whenever it changes.
The metric evaluation region is their intersection.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch
from .geometry import RigidTransform, SlicePose
from .images import Mask2D, SliceImage, Volume
from .resample import inside_mask, voxel_grid_coords


def positive_mask(s: SliceImage) -> Mask2D:
    """True exactly where the (preprocessed) slice value is positive."""
    return s.data > 0


def overlap_mask(v: Volume, pose: SlicePose, t: RigidTransform) -> Mask2D:
    """True where a pixel's world position falls inside the volume grid.

    Matches the valid mask resample_on_slice produces for the same
    geometry.
    """
    return inside_mask(v, voxel_grid_coords(v, pose, t))


def intersect(masks) -> Mask2D:
    """Logical AND of one or more equally shaped masks."""
    masks = list(masks)
    if not masks:
        raise ValueError("intersect needs at least one mask")
    out = np.asarray(masks[0], dtype=bool)
    for m in masks[1:]:
        m = np.asarray(m, dtype=bool)
        if m.shape != out.shape:
            raise ShapeMismatch(f"mask shapes differ: {out.shape} vs {m.shape}")
        out = out & m
    return out
