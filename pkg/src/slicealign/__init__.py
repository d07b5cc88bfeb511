"""slicealign: interactive slice-to-volume registration workbench.

A numerical core for rigid 2D/3D alignment (transform algebra,
resampling, masks, similarity metrics, per-slice edit histories), a
configuration-driven dataset layer with NIfTI-1 I/O, an HTTP annotation
service with PNG/scene rendering, and a batch evaluation CLI.
"""

from .errors import SliceAlignError
from .geometry import (RigidParams, RigidTransform, SlicePose, WorldPoint,
                       apply_increment, invert, matrix_to_rigid, pixel_to_world,
                       rigid_to_matrix, slice_axes)
from .history import TransformationHistory
from .images import Mask2D, ResampledSlice, SliceImage, Volume, preprocess, world_to_voxel
from .masking import intersect, overlap_mask, positive_mask
from .metrics import MetricScore, dice, hd95, is_best, nmi, sad
from .nifti import read_nifti, read_transform_csv, write_nifti, write_transform_csv
from .resample import binarize, resample_on_slice
from .session import Session, StyleState

__all__ = [
    "SliceAlignError",
    "WorldPoint", "RigidParams", "RigidTransform", "SlicePose",
    "rigid_to_matrix", "matrix_to_rigid", "invert", "apply_increment",
    "slice_axes", "pixel_to_world",
    "Volume", "SliceImage", "Mask2D", "ResampledSlice", "preprocess", "world_to_voxel",
    "read_nifti", "write_nifti", "read_transform_csv", "write_transform_csv",
    "resample_on_slice", "binarize",
    "positive_mask", "overlap_mask", "intersect",
    "MetricScore", "nmi", "sad", "dice", "hd95", "is_best",
    "TransformationHistory",
    "Session", "StyleState",
]

__version__ = "0.1.0"
