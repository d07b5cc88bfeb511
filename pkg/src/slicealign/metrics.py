"""Similarity/difference metrics for live guidance and label evaluation.

NMI is the ratio (H(a) + H(b)) / H(a, b) of marginal to joint entropies
over a joint histogram restricted to the evaluation region; it is 2 for
identical images and 1 for independent ones. SAD is the raw sum of
absolute intensity differences (mask-size dependent by design). Dice and
the 95th-percentile Hausdorff distance evaluate segmentation masks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInput, EmptyMask, EmptyRegion, ShapeMismatch
from .images import Mask2D

DEFAULT_BINS = 64


@dataclass(frozen=True)
class MetricScore:
    kind: str                 # "nmi" | "sad"
    value: float

    def __post_init__(self):
        if self.kind not in ("nmi", "sad"):
            raise ValueError(f"unknown metric kind {self.kind!r}")

    @property
    def higher_is_better(self) -> bool:
        return self.kind == "nmi"

    def better_than(self, other: "MetricScore") -> bool:
        if other.kind != self.kind:
            raise ValueError(f"cannot compare {self.kind} with {other.kind}")
        return self.value > other.value if self.higher_is_better else self.value < other.value


def _masked_pair(a, b, region: Mask2D):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    region = np.asarray(region, dtype=bool)
    if a.shape != b.shape or a.shape != region.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape}, {b.shape}, region {region.shape}")
    return a[region], b[region]


def _bin_indices(values: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros(values.shape, dtype=np.intp)
    idx = np.floor((values - lo) / (hi - lo) * bins).astype(np.intp)
    return np.minimum(idx, bins - 1)     # top edge belongs to the last bin


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def nmi(a, b, region: Mask2D, bins: int = DEFAULT_BINS) -> MetricScore:
    """Normalized mutual information over the masked region.

    Bin edges are linear per image, spanning [min, max] of the masked
    values; entropies use natural logs (the units cancel in the ratio).
    """
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    va, vb = _masked_pair(a, b, region)
    if va.size < 2:
        raise DegenerateInput(f"NMI needs at least 2 pixels in the region, got {va.size}")
    joint = np.bincount(_bin_indices(va, bins) * bins + _bin_indices(vb, bins),
                        minlength=bins * bins).reshape(bins, bins)
    p = joint / va.size
    h_joint = _entropy(p.ravel())
    if h_joint == 0.0:
        raise DegenerateInput("joint entropy is zero (both images constant on the region)")
    value = (_entropy(p.sum(axis=1)) + _entropy(p.sum(axis=0))) / h_joint
    return MetricScore(kind="nmi", value=value)


def sad(a, b, region: Mask2D) -> MetricScore:
    """Sum of absolute differences over the masked region."""
    va, vb = _masked_pair(a, b, region)
    if va.size == 0:
        raise EmptyRegion("SAD region contains no pixels")
    return MetricScore(kind="sad", value=float(np.abs(va - vb).sum()))


def dice(a: Mask2D, b: Mask2D) -> float:
    """Overlap score 2|a AND b| / (|a| + |b|); two empty masks count as 1.0."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    na, nb = int(a.sum()), int(b.sum())
    if na + nb == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / (na + nb)


def boundary_points(mask: Mask2D, spacing=(1.0, 1.0)) -> np.ndarray:
    """Millimeter coordinates of mask pixels with a 4-neighbor outside the mask."""
    m = np.asarray(mask, dtype=bool)
    interior = np.zeros_like(m)
    interior[1:-1, 1:-1] = (m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:])
    edge = m & ~interior
    pts = np.argwhere(edge).astype(float)
    pts[:, 0] *= spacing[0]
    pts[:, 1] *= spacing[1]
    return pts


def hd95(a: Mask2D, b: Mask2D, spacing=(1.0, 1.0)) -> float:
    """Symmetric 95th-percentile boundary distance in mm.

    Directed distances are nearest-neighbor distances between boundary
    point sets; the percentile interpolates linearly between order
    statistics and the result is the max of the two directions.
    """
    pa = boundary_points(a, spacing)
    pb = boundary_points(b, spacing)
    if pa.size == 0 or pb.size == 0:
        raise EmptyMask("hd95 needs two non-empty masks")
    d_ab = cKDTree(pb).query(pa)[0]
    d_ba = cKDTree(pa).query(pb)[0]
    return float(max(np.percentile(d_ab, 95), np.percentile(d_ba, 95)))


def is_best(score: MetricScore, history_scores) -> bool:
    """True iff the score strictly beats every prior score; ties lose."""
    return all(score.better_than(prev) for prev in history_scores)
