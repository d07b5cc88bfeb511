"""2D plot composition and the 3D scene description.

All operations are pure functions of image data and style values, so
repeated calls produce byte-identical PNGs. Arrays are encoded with axis
0 as image rows; callers holding (cols, rows) slice data transpose
before encoding.
"""
from __future__ import annotations

import io
import itertools

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ShapeMismatch
from .geometry import RigidTransform, pixel_to_world
from .images import Mask2D, SliceImage, Volume

OVERLAY_FORMATS = ("mask", "contour", "none")


def default_window(values: np.ndarray, mask: Mask2D | None = None) -> tuple[float, float]:
    """[1st, 99th] percentile window of the masked values."""
    v = np.asarray(values, dtype=float)
    if mask is not None:
        v = v[np.asarray(mask, dtype=bool)]
    v = v[np.isfinite(v)]
    if v.size == 0:
        return (0.0, 1.0)
    lo, hi = float(np.percentile(v, 1)), float(np.percentile(v, 99))
    if hi <= lo:
        hi = lo + 1.0
    return (lo, hi)


def window_to_gray(img: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map intensities to 8-bit gray: round(255 * clamp((v-lo)/(hi-lo), 0, 1))."""
    if not lo < hi:
        raise ValueError(f"window requires lo < hi, got ({lo}, {hi})")
    scaled = np.clip((np.asarray(img, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return np.floor(scaled * 255.0 + 0.5).astype(np.uint8)    # round half up


def _to_rgba(gray: np.ndarray) -> np.ndarray:
    out = np.empty(gray.shape + (4,), dtype=np.uint8)
    out[..., 0] = out[..., 1] = out[..., 2] = gray
    out[..., 3] = 255
    return out


def contour_region(label: Mask2D, line_width: int) -> Mask2D:
    """Label boundary (4-connectivity) dilated to the requested line width."""
    m = np.asarray(label, dtype=bool)
    interior = np.zeros_like(m)
    interior[1:-1, 1:-1] = (m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:])
    edge = m & ~interior
    radius = max(int(line_width) - 1, 0) // 2
    if radius == 0:
        return edge
    return ndimage.binary_dilation(edge, structure=np.ones((2 * radius + 1,) * 2, dtype=bool))


def overlay(gray: np.ndarray, label: Mask2D, color, opacity: float,
            fmt: str = "mask", line_width: int = 1) -> np.ndarray:
    """Blend a label over an 8-bit gray image, returning RGBA.

    fmt "mask" colors every label pixel, "contour" only the boundary
    band, "none" passes the grayscale through. Blending is
    (1-opacity)*gray + opacity*color per channel.
    """
    gray = np.asarray(gray, dtype=np.uint8)
    label = np.asarray(label, dtype=bool)
    if gray.shape != label.shape:
        raise ShapeMismatch(f"gray {gray.shape} and label {label.shape} differ in shape")
    if fmt not in OVERLAY_FORMATS:
        raise ValueError(f"unknown overlay format {fmt!r}")
    if not 0.0 <= opacity <= 1.0:
        raise ValueError(f"opacity must lie in [0, 1], got {opacity}")
    out = _to_rgba(gray)
    if fmt == "none":
        return out
    region = label if fmt == "mask" else contour_region(label, line_width)
    rgb = np.asarray(color, dtype=float).ravel()[:3]
    blended = np.floor((1.0 - opacity) * gray[region, None] + opacity * rgb[None, :] + 0.5)
    out[region, :3] = blended.astype(np.uint8)
    return out


def checkerboard(a: np.ndarray, b: np.ndarray, width: int) -> np.ndarray:
    """Interleave two images in square checkers of the given pixel width."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"checkerboard inputs differ in shape: {a.shape} vs {b.shape}")
    if width < 1:
        raise ValueError(f"checker width must be >= 1, got {width}")
    ii, jj = np.indices(a.shape[:2])
    take_a = ((ii // width + jj // width) % 2) == 0
    return np.where(take_a, a, b)


def encode_png(img: np.ndarray) -> bytes:
    """Losslessly encode an 8-bit gray or RGBA array (axis 0 = rows)."""
    img = np.ascontiguousarray(img)
    if img.ndim == 2:
        pil = Image.fromarray(img, mode="L")
    elif img.ndim == 3 and img.shape[2] == 4:
        pil = Image.fromarray(img, mode="RGBA")
    else:
        raise ShapeMismatch(f"expected (h, w) gray or (h, w, 4) RGBA, got {img.shape}")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Inverse of encode_png (used by tests and the round-trip contract)."""
    return np.asarray(Image.open(io.BytesIO(data)))


# -- 3D scene -----------------------------------------------------------------

def volume_bbox_world(v: Volume) -> dict:
    """World axis-aligned bounding box of the voxel index grid."""
    n = v.shape
    corners_idx = np.array(list(itertools.product((0, n[0] - 1), (0, n[1] - 1), (0, n[2] - 1))),
                           dtype=float)
    world = corners_idx @ v.affine[:3, :3].T + v.affine[:3, 3]
    lo, hi = world.min(axis=0), world.max(axis=0)
    box = np.array(list(itertools.product(*zip(lo, hi))))
    return {"min": lo.tolist(), "max": hi.tolist(), "corners": box.tolist()}


def slice_corners_world(s: SliceImage, t: RigidTransform) -> list[list[float]]:
    """World positions of the four pixel-grid corners under the transform."""
    cols, rows = s.pose.cols, s.pose.rows
    pix = [(0, 0), (cols - 1, 0), (0, rows - 1), (cols - 1, rows - 1)]
    return [list(pixel_to_world(s.pose, t, i, j).as_array()) for i, j in pix]


def camera_presets(bbox: dict) -> dict:
    lo = np.array(bbox["min"])
    hi = np.array(bbox["max"])
    center = (lo + hi) / 2.0
    dist = 2.0 * float(np.linalg.norm(hi - lo)) or 100.0
    return {
        "axial": {"position": (center + [0, 0, dist]).tolist(), "up": [0, 1, 0]},
        "coronal": {"position": (center + [0, -dist, 0]).tolist(), "up": [0, 0, 1]},
        "sagittal": {"position": (center + [dist, 0, 0]).tolist(), "up": [0, 0, 1]},
        "target": center.tolist(),
    }


def scene(volume: Volume, slice_entries, selected: str, mode: str) -> dict:
    """Structured 3D scene: volume box, slice corner quads, camera presets.

    slice_entries is an ordered list of (SliceImage, RigidTransform). In
    micro mode only the selected slice appears; macro shows all.
    """
    bbox = volume_bbox_world(volume)
    slices = []
    for s, t in slice_entries:
        if mode == "micro" and s.id != selected:
            continue
        slices.append({
            "slice_id": s.id,
            "corners": slice_corners_world(s, t),
            "texture": f"/api/plot/main?slice_id={s.id}&format=none",
            "cols": s.pose.cols,
            "rows": s.pose.rows,
        })
    return {"volume_bbox": bbox, "slices": slices, "cameras": camera_presets(bbox),
            "mode": mode, "selected": selected}
