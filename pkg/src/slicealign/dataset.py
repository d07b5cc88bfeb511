"""Configuration parsing, dataset scanning and output path synthesis.

A dataset is described by a JSON config: a root directory, three regular
expressions matching root-relative file paths (with named capture groups
``case_id``, and ``slice_id`` for slices), and two output templates with
``{case_id}`` / ``{slice_id}`` placeholders. Paths are matched with "/"
separators on every platform so configs stay portable. Scanning walks
the root once and produces an immutable table grouped by case id.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path, PurePosixPath

from .errors import (AmbiguousMatch, BadPattern, EmptyDataset, IncompleteCase,
                     MalformedConfig, MissingCaptureGroup, MissingField, UnknownCase)

LABEL_KINDS = ("binary", "categorical")

_REQUIRED = ("dataset_root", "volume_pattern", "label3d_pattern", "slice_pattern",
             "output_transform_template", "output_label_template")


@dataclass(frozen=True)
class DatasetConfig:
    dataset_root: str
    volume_pattern: str
    label3d_pattern: str
    slice_pattern: str
    output_transform_template: str
    output_label_template: str
    label_kind: str = "binary"
    binarization_threshold: float = 0.5

    def root_path(self) -> Path:
        return Path(self.dataset_root)


@dataclass(frozen=True)
class DatasetRow:
    case_id: str
    role: str                    # "volume" | "label3d" | "slice"
    path: str                    # root-relative, "/"-separated
    slice_id: str | None = None


@dataclass(frozen=True)
class DatasetTable:
    rows: tuple[DatasetRow, ...]
    case_ids: tuple[str, ...]


@dataclass(frozen=True)
class CaseBundle:
    case_id: str
    volume_path: Path
    label3d_path: Path
    slices: tuple[tuple[str, Path], ...]           # (slice_id, path), ordered
    transform_csv_path: Path
    label_paths: dict[str, Path] = field(default_factory=dict)


def expand_template(template: str, case_id: str, slice_id: str | None = None) -> str:
    """Substitute {case_id} / {slice_id} placeholders in an output template."""
    out = template.replace("{case_id}", case_id)
    if slice_id is not None:
        out = out.replace("{slice_id}", slice_id)
    return out


def _compile(name: str, pattern: str, groups: tuple[str, ...]) -> re.Pattern:
    try:
        rx = re.compile(pattern)
    except re.error as e:
        raise BadPattern(f"{name}: {e}") from None
    for g in groups:
        if g not in rx.groupindex:
            raise MissingCaptureGroup(f"{name} must define a (?P<{g}>...) group")
    return rx


def parse_config(text: str) -> DatasetConfig:
    """Decode and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedConfig(f"configuration cannot be decoded: {e}") from None
    if not isinstance(doc, dict):
        raise MalformedConfig("configuration must be a JSON object")
    for key in _REQUIRED:
        if key not in doc:
            raise MissingField(f"configuration is missing {key!r}")

    cfg = DatasetConfig(
        dataset_root=str(doc["dataset_root"]),
        volume_pattern=str(doc["volume_pattern"]),
        label3d_pattern=str(doc["label3d_pattern"]),
        slice_pattern=str(doc["slice_pattern"]),
        output_transform_template=str(doc["output_transform_template"]),
        output_label_template=str(doc["output_label_template"]),
        label_kind=str(doc.get("label_kind", "binary")),
        binarization_threshold=float(doc.get("binarization_threshold", 0.5)),
    )
    if cfg.label_kind not in LABEL_KINDS:
        raise MalformedConfig(f"label_kind must be one of {LABEL_KINDS}, got {cfg.label_kind!r}")
    if not 0.0 < cfg.binarization_threshold < 1.0:
        raise MalformedConfig(
            f"binarization_threshold must lie in (0, 1), got {cfg.binarization_threshold}")
    _compile("volume_pattern", cfg.volume_pattern, ("case_id",))
    _compile("label3d_pattern", cfg.label3d_pattern, ("case_id",))
    _compile("slice_pattern", cfg.slice_pattern, ("case_id", "slice_id"))
    if "{case_id}" not in cfg.output_transform_template:
        raise MissingField("output_transform_template must contain {case_id}")
    for ph in ("{case_id}", "{slice_id}"):
        if ph not in cfg.output_label_template:
            raise MissingField(f"output_label_template must contain {ph}")
    return cfg


def load_config(path) -> DatasetConfig:
    """parse_config from a file; a relative root resolves against the file."""
    path = Path(path)
    cfg = parse_config(path.read_text(encoding="utf-8"))
    root = Path(cfg.dataset_root)
    if not root.is_absolute():
        cfg = replace(cfg, dataset_root=str((path.parent / root).resolve()))
    return cfg


def scan(config: DatasetConfig) -> DatasetTable:
    """Walk the dataset root and group matched files by case id.

    Every case needs exactly one volume, one 3D label and at least one
    slice; a path matching several patterns, or several files filling
    one single-file role, is an error rather than a silent pick.
    """
    root = config.root_path()
    if not root.is_dir():
        raise EmptyDataset(f"dataset root {root} does not exist or is not a directory")

    patterns = {
        "volume": _compile("volume_pattern", config.volume_pattern, ("case_id",)),
        "label3d": _compile("label3d_pattern", config.label3d_pattern, ("case_id",)),
        "slice": _compile("slice_pattern", config.slice_pattern, ("case_id", "slice_id")),
    }

    relpaths = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        rel = Path(dirpath).relative_to(root)
        for fn in sorted(filenames):
            relpaths.append(str(PurePosixPath(rel / fn)))
    relpaths.sort()

    rows: list[DatasetRow] = []
    for rel in relpaths:
        hits = [(role, rx.fullmatch(rel)) for role, rx in patterns.items()]
        hits = [(role, m) for role, m in hits if m is not None]
        if len(hits) > 1:
            roles = ", ".join(role for role, _ in hits)
            raise AmbiguousMatch(f"{rel} matches several patterns: {roles}")
        if not hits:
            continue
        role, m = hits[0]
        rows.append(DatasetRow(case_id=m.group("case_id"), role=role, path=rel,
                               slice_id=m.group("slice_id") if role == "slice" else None))

    if not rows:
        raise EmptyDataset(f"no files under {root} match the configured patterns")

    case_ids = sorted({r.case_id for r in rows})
    ordered: list[DatasetRow] = []
    for cid in case_ids:
        case_rows = [r for r in rows if r.case_id == cid]
        for role in ("volume", "label3d"):
            found = [r for r in case_rows if r.role == role]
            if not found:
                raise IncompleteCase(f"case {cid!r} has no {role} file")
            if len(found) > 1:
                paths = ", ".join(r.path for r in found)
                raise AmbiguousMatch(f"case {cid!r} has several {role} files: {paths}")
        slices = sorted((r for r in case_rows if r.role == "slice"),
                        key=lambda r: r.slice_id)
        if not slices:
            raise IncompleteCase(f"case {cid!r} has no slice files")
        ids = [r.slice_id for r in slices]
        if len(set(ids)) != len(ids):
            raise AmbiguousMatch(f"case {cid!r} has duplicate slice ids: {ids}")
        ordered.extend(r for r in case_rows if r.role == "volume")
        ordered.extend(r for r in case_rows if r.role == "label3d")
        ordered.extend(slices)

    return DatasetTable(rows=tuple(ordered), case_ids=tuple(case_ids))


def bundle(table: DatasetTable, config: DatasetConfig, case_id: str) -> CaseBundle:
    """Resolve one case's input paths and synthesize its output locations."""
    if case_id not in table.case_ids:
        raise UnknownCase(f"case {case_id!r} is not in the dataset")
    root = config.root_path()
    case_rows = [r for r in table.rows if r.case_id == case_id]
    volume = next(r for r in case_rows if r.role == "volume")
    label3d = next(r for r in case_rows if r.role == "label3d")
    slices = tuple((r.slice_id, root / r.path) for r in case_rows if r.role == "slice")

    def _out(template: str, slice_id: str | None = None) -> Path:
        p = Path(expand_template(template, case_id, slice_id))
        return p if p.is_absolute() else root / p

    return CaseBundle(
        case_id=case_id,
        volume_path=root / volume.path,
        label3d_path=root / label3d.path,
        slices=slices,
        transform_csv_path=_out(config.output_transform_template),
        label_paths={sid: _out(config.output_label_template, sid) for sid, _ in slices},
    )
