"""One loaded case: routes actions to the processing units, keeps per-slice
histories, caches derived images, and saves outputs.

A session owns its state; callers serialize mutations (the HTTP layer
holds a lock). Derived data (resampled planes, 2D labels, masks) is
cached per slice and invalidated when that slice's transform changes, so
style-only changes never trigger re-resampling. Shifting to another case
auto-saves a dirty session first.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from . import masking, metrics
from .dataset import CaseBundle, DatasetConfig, DatasetTable, bundle
from .errors import (AtBoundary, DegenerateInput, EmptyRegion, NoScores,
                     ShapeMismatch, SliceAlignError, UnknownSlice)
from .geometry import (RigidParams, RigidTransform, apply_increment,
                       matrix_to_rigid, slice_center_world)
from .history import TransformationHistory
from .images import Mask2D, ResampledSlice, SliceImage, Volume, preprocess
from .metrics import MetricScore
from .nifti import read_nifti, write_nifti, write_transform_csv
from .render import default_window
from .resample import binarize, resample_on_slice

MODES = ("macro", "micro")
METRIC_KINDS = ("nmi", "sad")
ACTION_TYPES = ("translate", "rotate", "undo", "redo", "optimize", "reset")

STEP_RANGE = (0.1, 10.0)
DEFAULT_STEP_MM = 1.0
DEFAULT_STEP_DEG = 1.0


@dataclass(frozen=True)
class StyleState:
    """Display style properties; values validated on every update."""

    volume_window: tuple[float, float] = (0.0, 1.0)
    slice_window: tuple[float, float] = (0.0, 1.0)
    resampled_window: tuple[float, float] = (0.0, 1.0)
    label_color: tuple[int, int, int, int] = (255, 0, 0, 255)
    label_opacity: float = 0.5
    contour_width: int = 1
    checker_width: int = 32
    binarization_threshold: float = 0.5
    metric_visible: bool = True

    def __post_init__(self):
        for name in ("volume_window", "slice_window", "resampled_window"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} requires lo < hi, got ({lo}, {hi})")
        if not 0.0 <= self.label_opacity <= 1.0:
            raise ValueError(f"label_opacity must lie in [0, 1], got {self.label_opacity}")
        if self.contour_width < 1 or self.checker_width < 1:
            raise ValueError("widths must be >= 1")
        if not 0.0 < self.binarization_threshold < 1.0:
            raise ValueError(
                f"binarization_threshold must lie in (0, 1), got {self.binarization_threshold}")

    def updated(self, partial: dict) -> "StyleState":
        known = set(self.__dataclass_fields__)
        unknown = set(partial) - known
        if unknown:
            raise ValueError(f"unknown style fields: {sorted(unknown)}")
        fields = dict(partial)
        for name in ("volume_window", "slice_window", "resampled_window"):
            if name in fields:
                fields[name] = tuple(float(x) for x in fields[name])
        if "label_color" in fields:
            fields["label_color"] = tuple(int(x) for x in fields["label_color"])
        return replace(self, **fields)


def _load_image(path, case_id: str):
    try:
        return preprocess(read_nifti(path))
    except SliceAlignError as e:
        raise type(e)(f"case {case_id!r}: {e}") from e


class Session:
    """State and behaviour of one annotator working on one case."""

    def __init__(self, table: DatasetTable, config: DatasetConfig, case: CaseBundle,
                 volume: Volume, label3d: Volume, slices: list[SliceImage],
                 previous: Optional["Session"] = None):
        self.table = table
        self.config = config
        self.bundle = case
        self.volume = volume
        self.label3d = label3d
        self.slices = slices
        self.selected = slices[0].id
        self.histories: dict[str, TransformationHistory] = {}
        for s in slices:
            center = slice_center_world(s.pose, RigidTransform.identity())
            self.histories[s.id] = TransformationHistory(RigidTransform.identity(center))
        self.dirty = False

        if previous is not None:
            self.mode = previous.mode
            self.metric_kind = previous.metric_kind
            self.step_translation_mm = previous.step_translation_mm
            self.step_rotation_deg = previous.step_rotation_deg
            self.styles = previous.styles
        else:
            self.mode = "micro"
            self.metric_kind = "nmi"
            self.step_translation_mm = DEFAULT_STEP_MM
            self.step_rotation_deg = DEFAULT_STEP_DEG
            self.styles = self._default_styles()

        self._resampled: dict[str, ResampledSlice] = {}
        self._label2d: dict[str, ResampledSlice] = {}
        self._positive: dict[str, Mask2D] = {s.id: masking.positive_mask(s) for s in slices}

    # -- construction ---------------------------------------------------------

    @classmethod
    def load_case(cls, table: DatasetTable, config: DatasetConfig, case_id: str,
                  previous: Optional["Session"] = None) -> "Session":
        """Load a case, auto-saving the previous one first when dirty."""
        if previous is not None and previous.dirty:
            previous.save_outputs()
        case = bundle(table, config, case_id)
        volume = _load_image(case.volume_path, case_id)
        if not isinstance(volume, Volume):
            raise ShapeMismatch(f"case {case_id!r}: volume file {case.volume_path} is 2D")
        label_kind = "binary_label" if config.label_kind == "binary" else "categorical_label"
        label3d = _load_image(case.label3d_path, case_id)
        if not isinstance(label3d, Volume):
            raise ShapeMismatch(f"case {case_id!r}: 3D label file {case.label3d_path} is 2D")
        label3d = label3d.with_kind(label_kind)
        slices = []
        for sid, path in case.slices:
            img = _load_image(path, case_id)
            if not isinstance(img, SliceImage):
                raise ShapeMismatch(f"case {case_id!r}: slice file {path} is not 2D")
            slices.append(img.with_id(sid))
        return cls(table, config, case, volume, label3d, slices, previous)

    def _default_styles(self) -> StyleState:
        slice_values = np.concatenate([s.data[self._positive_of(s)] for s in self.slices]) \
            if self.slices else np.zeros(1)
        vol_window = default_window(self.volume.data, self.volume.data > 0)
        return StyleState(
            volume_window=vol_window,
            slice_window=default_window(slice_values),
            resampled_window=vol_window,
            binarization_threshold=self.config.binarization_threshold,
        )

    @staticmethod
    def _positive_of(s: SliceImage) -> Mask2D:
        return masking.positive_mask(s)

    # -- lookups and caches -----------------------------------------------------

    @property
    def slice_ids(self) -> list[str]:
        return [s.id for s in self.slices]

    def slice_by_id(self, slice_id: str) -> SliceImage:
        for s in self.slices:
            if s.id == slice_id:
                return s
        raise UnknownSlice(f"unknown slice id {slice_id!r}")

    def current_transform(self, slice_id: str) -> RigidTransform:
        return self.histories[slice_id].current()

    def current_params(self, slice_id: str) -> RigidParams:
        return matrix_to_rigid(self.current_transform(slice_id))

    def resampled(self, slice_id: str) -> ResampledSlice:
        """Volume resampled on the slice's current plane (trilinear)."""
        if slice_id not in self._resampled:
            s = self.slice_by_id(slice_id)
            self._resampled[slice_id] = resample_on_slice(
                self.volume, s.pose, self.current_transform(slice_id), "trilinear")
        return self._resampled[slice_id]

    def label2d(self, slice_id: str) -> ResampledSlice:
        """3D label resampled on the slice's current plane."""
        if slice_id not in self._label2d:
            s = self.slice_by_id(slice_id)
            method = "trilinear" if self.config.label_kind == "binary" else "nearest"
            self._label2d[slice_id] = resample_on_slice(
                self.label3d, s.pose, self.current_transform(slice_id), method)
        return self._label2d[slice_id]

    def label_mask(self, slice_id: str) -> Mask2D:
        """Foreground of the resampled 2D label (binarized for binary labels)."""
        l2d = self.label2d(slice_id)
        if self.config.label_kind == "binary":
            return binarize(l2d, self.styles.binarization_threshold)
        return l2d.valid & (l2d.values != 0)

    def positive(self, slice_id: str) -> Mask2D:
        return self._positive[slice_id]

    def overlap(self, slice_id: str) -> Mask2D:
        return self.resampled(slice_id).valid

    def region(self, slice_id: str) -> Mask2D:
        """Metric evaluation region: positive AND overlap."""
        return masking.intersect([self.positive(slice_id), self.overlap(slice_id)])

    def _invalidate(self, slice_id: str) -> None:
        self._resampled.pop(slice_id, None)
        self._label2d.pop(slice_id, None)

    # -- evaluation ---------------------------------------------------------------

    def _compute_score(self, slice_id: str, resampled: ResampledSlice) -> MetricScore:
        s = self.slice_by_id(slice_id)
        region = masking.intersect([self.positive(slice_id), resampled.valid])
        if self.metric_kind == "nmi":
            return metrics.nmi(s.data, resampled.values, region)
        return metrics.sad(s.data, resampled.values, region)

    def evaluate(self) -> tuple[MetricScore, bool]:
        """Live metric for the selected slice plus the optimality flag.

        Raises DegenerateInput/EmptyRegion when no meaningful value
        exists; the HTTP layer reports those as "unavailable".
        """
        score = self._compute_score(self.selected, self.resampled(self.selected))
        prior = [s for s in self.histories[self.selected].scores(exclude_cursor=True)
                 if s.kind == score.kind]
        return score, metrics.is_best(score, prior)

    def _score_or_none(self, slice_id: str, resampled: ResampledSlice) -> Optional[MetricScore]:
        try:
            return self._compute_score(slice_id, resampled)
        except (DegenerateInput, EmptyRegion):
            return None

    # -- actions --------------------------------------------------------------------

    def set_selected(self, slice_id: str) -> None:
        if slice_id not in self.histories:
            raise UnknownSlice(f"unknown slice id {slice_id!r}")
        self.selected = slice_id

    def set_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode

    def set_metric_kind(self, kind: str) -> None:
        if kind not in METRIC_KINDS:
            raise ValueError(f"metric kind must be one of {METRIC_KINDS}, got {kind!r}")
        self.metric_kind = kind

    def set_steps(self, translation_mm: float, rotation_deg: float) -> None:
        lo, hi = STEP_RANGE
        if not (lo <= translation_mm <= hi and lo <= rotation_deg <= hi):
            raise ValueError(f"step sizes must lie in [{lo}, {hi}]")
        self.step_translation_mm = translation_mm
        self.step_rotation_deg = rotation_deg

    def update_styles(self, partial: dict) -> None:
        # label_mask re-binarizes from the cached label2d, so no invalidation
        self.styles = self.styles.updated(partial)

    def _targets(self) -> list[str]:
        return [self.selected] if self.mode == "micro" else self.slice_ids

    def act(self, action: str, frame: str = "", axis: str = "", amount: float = 0.0) -> None:
        """Apply one transform action in the current mode.

        Increments and reset touch every targeted slice and record one
        history entry each (scored for the selected slice). Undo, redo
        and optimize move cursors per slice; in macro mode slices that
        cannot move are skipped, and the action fails only when no slice
        could perform it.
        """
        if action not in ACTION_TYPES:
            raise ValueError(f"unknown action {action!r}")

        if action in ("translate", "rotate"):
            kind = "translation" if action == "translate" else "rotation"
            for sid in self._targets():
                s = self.slice_by_id(sid)
                hist = self.histories[sid]
                new_t = apply_increment(hist.current(), kind, frame, axis, amount, s.pose)
                self._record(sid, new_t)
        elif action == "reset":
            for sid in self._targets():
                identity = RigidTransform.identity(self.histories[sid].current().center)
                self._record(sid, identity)
        else:
            moved = 0
            boundary_error: Optional[SliceAlignError] = None
            for sid in self._targets():
                hist = self.histories[sid]
                try:
                    if action == "optimize":
                        hist.best()
                    else:
                        hist.step(action)
                except (AtBoundary, NoScores) as e:
                    boundary_error = e
                    continue
                self._invalidate(sid)
                moved += 1
            if moved == 0:
                raise boundary_error if boundary_error is not None else AtBoundary("nothing to do")
        self.dirty = True

    def _record(self, slice_id: str, new_t: RigidTransform) -> None:
        s = self.slice_by_id(slice_id)
        resampled = resample_on_slice(self.volume, s.pose, new_t, "trilinear")
        score = self._score_or_none(slice_id, resampled) if slice_id == self.selected else None
        self.histories[slice_id].record(new_t, score)
        self._invalidate(slice_id)
        self._resampled[slice_id] = resampled

    # -- persistence -------------------------------------------------------------

    def saved_label(self, slice_id: str) -> ResampledSlice:
        """The 2D label content that save_outputs writes for a slice."""
        l2d = self.label2d(slice_id)
        if self.config.label_kind == "binary":
            mask = binarize(l2d, self.styles.binarization_threshold)
            return ResampledSlice(values=mask.astype(np.float32), valid=l2d.valid)
        return l2d

    def save_outputs(self) -> None:
        """Write the per-case transform CSV and one NIfTI label per slice."""
        entries = [(sid, self.current_params(sid)) for sid in self.slice_ids]
        write_transform_csv(self.bundle.case_id, entries, self.bundle.transform_csv_path)
        for sid in self.slice_ids:
            s = self.slice_by_id(sid)
            write_nifti(self.saved_label(sid), s.pose, self.current_transform(sid),
                        self.bundle.label_paths[sid])
        self.dirty = False

    # -- summaries --------------------------------------------------------------

    def state_summary(self) -> dict:
        return {
            "case_id": self.bundle.case_id,
            "slice_ids": self.slice_ids,
            "selected": self.selected,
            "mode": self.mode,
            "metric_kind": self.metric_kind,
            "label_kind": self.config.label_kind,
            "params": {sid: asdict(self.current_params(sid)) for sid in self.slice_ids},
            "step_sizes": {"translation_mm": self.step_translation_mm,
                           "rotation_deg": self.step_rotation_deg},
            "styles": asdict(self.styles),
            "dirty": self.dirty,
        }
