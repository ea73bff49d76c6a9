"""Append-only, timestamped logs of everything a session sent or received.

Transcripts persist as JSONL, one record per line:
``{"ts_unix_ms": int, "direction": "sent"|"received"|"note", "envelope": {...}}``.
Records for undecodable frames carry ``"envelope": null`` plus a ``"raw"``
field; app-level annotations use direction ``"note"``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

DIRECTIONS = frozenset({"sent", "received", "note"})


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class TranscriptEntry:
    ts_unix_ms: int
    direction: str
    envelope: dict[str, Any] | None
    raw: str | None = None
    note: str | None = None

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "ts_unix_ms": self.ts_unix_ms,
            "direction": self.direction,
            "envelope": self.envelope,
        }
        if self.raw is not None:
            obj["raw"] = self.raw
        if self.note is not None:
            obj["note"] = self.note
        return obj

    @classmethod
    def from_obj(cls, obj: dict[str, Any]) -> "TranscriptEntry":
        return cls(
            ts_unix_ms=obj["ts_unix_ms"],
            direction=obj["direction"],
            envelope=obj.get("envelope"),
            raw=obj.get("raw"),
            note=obj.get("note"),
        )


class Transcript:
    """Totally ordered event log with non-decreasing timestamps."""

    def __init__(self) -> None:
        self.entries: list[TranscriptEntry] = []
        self._last_ts = 0

    def _stamp(self) -> int:
        # wall clock is not monotonic; clamp so the ordering invariant holds
        ts = max(now_ms(), self._last_ts)
        self._last_ts = ts
        return ts

    def record(
        self,
        direction: str,
        envelope: dict[str, Any] | None,
        *,
        raw: str | None = None,
        note: str | None = None,
    ) -> TranscriptEntry:
        entry = TranscriptEntry(self._stamp(), direction, envelope, raw, note)
        self.entries.append(entry)
        return entry

    def note(self, text: str) -> TranscriptEntry:
        return self.record("note", None, note=text)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(e.to_obj(), separators=(",", ":"), ensure_ascii=False) + "\n"
            for e in self.entries
        )

    def write(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path


def read_jsonl(path: Path | str) -> list[TranscriptEntry]:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            entries.append(TranscriptEntry.from_obj(json.loads(line)))
    return entries


def validate_entries(entries: Iterable[TranscriptEntry]) -> list[str]:
    """Structural validation used by the CLI inspector and tests."""
    from .protocol import MalformedMessageError, decode_envelope

    problems: list[str] = []
    last_ts = None
    for i, entry in enumerate(entries):
        if entry.direction not in DIRECTIONS:
            problems.append(f"entry {i}: unknown direction {entry.direction!r}")
        if last_ts is not None and entry.ts_unix_ms < last_ts:
            problems.append(f"entry {i}: timestamp decreased")
        last_ts = entry.ts_unix_ms
        if entry.envelope is None:
            if entry.direction != "note" and entry.raw is None:
                problems.append(f"entry {i}: no envelope and no raw text")
            continue
        try:
            decode_envelope(json.dumps(entry.envelope))
        except MalformedMessageError as exc:
            problems.append(f"entry {i}: invalid envelope: {exc}")
    return problems


def comparable_lines(entries: Iterable[TranscriptEntry]) -> list[str]:
    """Render entries for run-to-run comparison.

    Timestamps and server-generated session ids are fresh on every run, so
    they are canonicalized; everything else must match byte for byte.
    """
    lines = []
    for entry in entries:
        obj = entry.to_obj()
        obj["ts_unix_ms"] = 0
        envelope = obj.get("envelope")
        if envelope and envelope.get("kind") == "hello_ack":
            envelope = dict(envelope)
            payload = dict(envelope.get("payload", {}))
            payload["session_id"] = "<session>"
            envelope["payload"] = payload
            obj["envelope"] = envelope
        lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
    return lines


def replay_states(entries: Iterable[TranscriptEntry]) -> list[str]:
    """Derive the session state sequence a transcript encodes.

    Replaying a persisted transcript must reproduce the transitions the live
    session recorded.
    """
    states = ["AwaitingHello"]

    def push(state: str) -> None:
        if states[-1] != state:
            states.append(state)

    for entry in entries:
        if states[-1] == "Closed":
            break
        if entry.note is not None and entry.note.startswith("session closed"):
            push("Closed")
            continue
        if entry.envelope is None:
            continue
        kind = entry.envelope.get("kind")
        if kind == "hello_ack" and entry.direction == "sent":
            push("Ready")
        elif kind == "error" and entry.direction == "sent" and states[-1] == "AwaitingHello":
            push("Closed")
        elif kind == "bye":
            push("Closed")
    return states
