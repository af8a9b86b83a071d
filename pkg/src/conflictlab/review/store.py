"""Durable append-only storage for review events.

Every accepted label or score is one JSON line in an events log,
flushed and fsynced before the write is acknowledged, so an
acknowledged event survives a crash.  In-memory state (latest-wins maps
of labels and scores) is derived purely by replaying the log; a
snapshot file is an optimization that lets startup skip already-applied
events, never an independent source of truth.

Mutations accept an optional idempotency key: retrying a request with
the same key returns the original acknowledgement without appending a
second event.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import IoFailure
from .scoring import LabelEvent, ReviewScore

__all__ = ["EVENTS_SCHEMA", "SNAPSHOT_SCHEMA", "ReviewState", "EventStore"]

EVENTS_SCHEMA = "conflictlab/review-events.v1"
SNAPSHOT_SCHEMA = "conflictlab/review-snapshot.v1"


@dataclass
class ReviewState:
    """Latest-wins view of every acknowledged review event."""

    labels: dict[tuple[str, str], LabelEvent] = field(default_factory=dict)
    scores: dict[tuple[str, str, str, str], ReviewScore] = field(default_factory=dict)
    acks: dict[str, dict] = field(default_factory=dict)
    last_seq: int = 0

    def apply(self, event: dict) -> None:
        """Apply one event record. Replay calls this in log order."""
        kind = event.get("kind")
        payload = event.get("payload", {})
        if kind == "label":
            item = LabelEvent.from_record(payload)
            self.labels[item.key] = item
        elif kind == "score":
            item = ReviewScore.from_record(payload)
            self.scores[item.key] = item
        else:
            raise IoFailure(f"unknown review event kind {kind!r}")
        seq = event["seq"]
        self.last_seq = max(self.last_seq, seq)
        key = event.get("idempotency_key")
        if key:
            self.acks[key] = {"seq": seq, "kind": kind, "duplicate": False}

    def label_events(self) -> list[LabelEvent]:
        """Latest label per (annotator, observation), in log order."""
        return sorted(self.labels.values(), key=lambda e: e.key)

    def scores_for(self, run_id: str, target=None) -> list[ReviewScore]:
        """Latest scores for a run, optionally narrowed to one target."""
        selected = [s for s in self.scores.values() if s.run_id == run_id]
        if target is not None:
            target_value = getattr(target, "value", target)
            selected = [s for s in selected if s.target.value == target_value]
        return sorted(selected, key=lambda s: s.key)


def _read_events(path: Path) -> list[dict]:
    """Parse the event log, tolerating a torn final line.

    A partial final line is the footprint of a crash mid-write — that
    event was never acknowledged, so it is dropped.  Corruption anywhere
    earlier means acknowledged history is damaged and raises
    :class:`IoFailure`.
    """
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read event log {path}: {exc}") from exc
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    events: list[dict] = []
    for lineno, line in enumerate(lines, start=1):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            if lineno == len(lines) and not raw.endswith("\n"):
                break  # torn final line: unacknowledged, drop it
            raise IoFailure(
                f"corrupt event log {path} at line {lineno}: {exc}"
            ) from exc
        if lineno == 1:
            if record.get("schema") != EVENTS_SCHEMA:
                raise IoFailure(
                    f"event log {path} has schema {record.get('schema')!r}, "
                    f"expected {EVENTS_SCHEMA!r}"
                )
            continue
        events.append(record)
    return events


def _truncate_torn_tail(path: Path) -> None:
    """Drop partial bytes after the last newline.

    They are the footprint of a crash mid-append — never acknowledged —
    and must not prefix the next appended line.
    """
    data = path.read_bytes()
    if not data or data.endswith(b"\n"):
        return
    cut = data.rfind(b"\n")
    with path.open("r+b") as fh:
        fh.truncate(cut + 1 if cut >= 0 else 0)


class EventStore:
    """Append-only review event log with snapshot-accelerated startup."""

    def __init__(self, events_path: Path | str, snapshot_path: Path | str | None = None):
        self._path = Path(events_path)
        self._snapshot_path = (
            Path(snapshot_path)
            if snapshot_path is not None
            else self._path.with_suffix(".snapshot.json")
        )
        self._lock = threading.Lock()
        self._path.parent.mkdir(parents=True, exist_ok=True)
        if self._path.exists():
            _truncate_torn_tail(self._path)
        self._state = self._load()
        fresh = not self._path.exists() or self._path.stat().st_size == 0
        self._fh = self._path.open("a", encoding="utf-8")
        if fresh:
            self._write_line({"schema": EVENTS_SCHEMA})

    # -- loading ---------------------------------------------------------

    def _load(self) -> ReviewState:
        state = ReviewState()
        snapshot_seq = 0
        if self._snapshot_path.exists():
            state, snapshot_seq = self._load_snapshot()
        if self._path.exists():
            for event in _read_events(self._path):
                if event["seq"] > snapshot_seq:
                    state.apply(event)
        return state

    def _load_snapshot(self) -> tuple[ReviewState, int]:
        try:
            record = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailure(
                f"cannot read snapshot {self._snapshot_path}: {exc}"
            ) from exc
        if record.get("schema") != SNAPSHOT_SCHEMA:
            raise IoFailure(
                f"snapshot {self._snapshot_path} has schema "
                f"{record.get('schema')!r}, expected {SNAPSHOT_SCHEMA!r}"
            )
        state = ReviewState(last_seq=record["last_seq"])
        for payload in record["labels"]:
            item = LabelEvent.from_record(payload)
            state.labels[item.key] = item
        for payload in record["scores"]:
            item = ReviewScore.from_record(payload)
            state.scores[item.key] = item
        state.acks = dict(record.get("acks", {}))
        return state, record["last_seq"]

    @staticmethod
    def replay(events_path: Path | str) -> ReviewState:
        """Rebuild state from the log alone, ignoring any snapshot."""
        state = ReviewState()
        for event in _read_events(Path(events_path)):
            state.apply(event)
        return state

    # -- writing ---------------------------------------------------------

    def _write_line(self, record: dict) -> None:
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def _append(self, kind: str, payload: dict, idempotency_key: str | None) -> dict:
        with self._lock:
            if idempotency_key and idempotency_key in self._state.acks:
                prior = dict(self._state.acks[idempotency_key])
                prior["duplicate"] = True
                return prior
            seq = self._state.last_seq + 1
            event = {"seq": seq, "kind": kind, "payload": payload}
            if idempotency_key:
                event["idempotency_key"] = idempotency_key
            self._write_line(event)
            self._state.apply(event)
            return {"seq": seq, "kind": kind, "duplicate": False}

    def append_label(self, event: LabelEvent, idempotency_key: str | None = None) -> dict:
        """Durably record a label event; returns the acknowledgement."""
        return self._append("label", event.to_record(), idempotency_key)

    def append_score(self, score: ReviewScore, idempotency_key: str | None = None) -> dict:
        """Durably record a rubric score; returns the acknowledgement."""
        return self._append("score", score.to_record(), idempotency_key)

    # -- reading ---------------------------------------------------------

    @property
    def state(self) -> ReviewState:
        return self._state

    @property
    def events_path(self) -> Path:
        return self._path

    # -- snapshotting ----------------------------------------------------

    def write_snapshot(self) -> Path:
        """Atomically persist current state so startup can skip replay."""
        with self._lock:
            record = {
                "schema": SNAPSHOT_SCHEMA,
                "last_seq": self._state.last_seq,
                "labels": [e.to_record() for e in sorted(
                    self._state.labels.values(), key=lambda e: e.key)],
                "scores": [s.to_record() for s in sorted(
                    self._state.scores.values(), key=lambda s: s.key)],
                "acks": self._state.acks,
            }
            tmp = self._snapshot_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(record, sort_keys=True) + "\n", encoding="utf-8")
            os.replace(tmp, self._snapshot_path)
            return self._snapshot_path

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
