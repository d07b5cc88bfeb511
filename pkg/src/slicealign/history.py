"""Per-slice transformation history: undo/redo/optimize/reset.

A history is a linear list of (transform, optional score) entries with a
cursor. Recording after an undo truncates the redo branch; undo/redo
move the cursor and never recompute anything. Reset records a fresh
identity entry instead of clearing, so the optimum stays retrievable
across resets.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import AtBoundary, NoScores
from .geometry import RigidTransform
from .metrics import MetricScore


@dataclass(frozen=True)
class HistoryEntry:
    transform: RigidTransform
    score: Optional[MetricScore] = None


class TransformationHistory:
    """Linear edit history for one slice; entry 0 is always the identity."""

    def __init__(self, identity: RigidTransform):
        self._entries: list[HistoryEntry] = [HistoryEntry(identity)]
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def cursor(self) -> int:
        return self._cursor

    @property
    def entries(self) -> tuple[HistoryEntry, ...]:
        return tuple(self._entries)

    def current(self) -> RigidTransform:
        return self._entries[self._cursor].transform

    def record(self, t: RigidTransform, score: Optional[MetricScore] = None) -> None:
        """Append (t, score) after the cursor, discarding any redo branch."""
        if score is not None:
            kinds = {e.score.kind for e in self._entries if e.score is not None}
            if kinds and score.kind not in kinds:
                # metric kind changed: older scores are no longer comparable
                self._entries = [HistoryEntry(e.transform) for e in self._entries]
        del self._entries[self._cursor + 1:]
        self._entries.append(HistoryEntry(t, score))
        self._cursor = len(self._entries) - 1

    def step(self, direction: str) -> RigidTransform:
        """Move the cursor one entry back ("undo") or forward ("redo")."""
        if direction == "undo":
            if self._cursor == 0:
                raise AtBoundary("already at the oldest entry")
            self._cursor -= 1
        elif direction == "redo":
            if self._cursor >= len(self._entries) - 1:
                raise AtBoundary("already at the newest entry")
            self._cursor += 1
        else:
            raise ValueError(f"unknown step direction {direction!r}")
        return self.current()

    def best(self) -> RigidTransform:
        """Move the cursor to the best-scored entry (earliest on ties)."""
        best_idx = None
        best_score: Optional[MetricScore] = None
        for idx, entry in enumerate(self._entries):
            if entry.score is None:
                continue
            if best_score is None or entry.score.better_than(best_score):
                best_idx, best_score = idx, entry.score
        if best_idx is None:
            raise NoScores("history has no scored entries")
        self._cursor = best_idx
        return self.current()

    def reset(self, identity: RigidTransform, score: Optional[MetricScore] = None) -> None:
        """Record a fresh identity entry; undo recovers the pre-reset state."""
        self.record(identity, score)

    def scores(self, exclude_cursor: bool = False) -> list[MetricScore]:
        """All stored scores, optionally leaving out the cursor entry's own."""
        return [e.score for i, e in enumerate(self._entries)
                if e.score is not None and not (exclude_cursor and i == self._cursor)]
