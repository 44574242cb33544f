"""Append-only JSONL event log with snapshot support.

One record per line; sequence numbers are contiguous from 1. Reading
verifies both JSON shape and sequence continuity so a corrupt or
truncated store is reported with the sequence number where trust ends
rather than silently replayed into a wrong state.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from ..errors import ReviewKitError
from ..timeutil import format_utc, parse_utc

EVENTS_FILENAME = "events.jsonl"
SNAPSHOT_FILENAME = "snapshot.json"

CHANGE_CREATED = "change_created"
GUIDE_STARTED = "guide_started"
ADVANCED = "advanced"
BOOKMARK_ADDED = "bookmark_added"
COMMENT_POSTED = "comment_posted"
LINT_ISSUED = "lint_issued"
HISTORY_IMPORTED = "history_imported"
EXPERT_REQUESTED = "expert_requested"
ASSIGNED = "assigned"
ASSIGNMENT_RELEASED = "assignment_released"
HEARTBEAT_RECORDED = "heartbeat_recorded"
REMINDER_SENT = "reminder_sent"

EVENT_KINDS = frozenset(
    {
        CHANGE_CREATED,
        GUIDE_STARTED,
        ADVANCED,
        BOOKMARK_ADDED,
        COMMENT_POSTED,
        LINT_ISSUED,
        HISTORY_IMPORTED,
        EXPERT_REQUESTED,
        ASSIGNED,
        ASSIGNMENT_RELEASED,
        HEARTBEAT_RECORDED,
        REMINDER_SENT,
    }
)


class StoreCorrupt(ReviewKitError):
    http_status = 500

    def __init__(self, seq: int, reason: str):
        self.seq = seq
        self.reason = reason
        super().__init__(f"event store corrupt at seq {seq}: {reason}")


@dataclass(frozen=True)
class EventRecord:
    seq: int
    at: datetime
    kind: str
    payload: dict
    scenario_tag: str | None = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "at": format_utc(self.at),
            "kind": self.kind,
            "payload": self.payload,
            "scenario_tag": self.scenario_tag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EventRecord":
        return cls(
            seq=data["seq"],
            at=parse_utc(data["at"]),
            kind=data["kind"],
            payload=data["payload"],
            scenario_tag=data.get("scenario_tag"),
        )


class EventLog:
    """Single-writer JSONL log under one data directory."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.events_path = self.data_dir / EVENTS_FILENAME
        self.snapshot_path = self.data_dir / SNAPSHOT_FILENAME

    def append(self, record: EventRecord) -> None:
        line = json.dumps(record.to_dict(), sort_keys=True)
        with open(self.events_path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()

    def read_all(self) -> list[EventRecord]:
        """Every record, validating shape and sequence continuity."""
        if not self.events_path.exists():
            return []
        records: list[EventRecord] = []
        last_seq = 0
        with open(self.events_path, "r", encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError:
                    raise StoreCorrupt(
                        last_seq + 1, "record is not valid JSON (truncated?)"
                    )
                try:
                    record = EventRecord.from_dict(data)
                except (KeyError, TypeError, ValueError):
                    raise StoreCorrupt(
                        data.get("seq", last_seq + 1)
                        if isinstance(data, dict)
                        else last_seq + 1,
                        "record is missing required fields",
                    )
                if record.seq <= last_seq:
                    raise StoreCorrupt(
                        record.seq,
                        f"sequence must increase (previous was {last_seq})",
                    )
                if record.kind not in EVENT_KINDS:
                    raise StoreCorrupt(record.seq, f"unknown kind {record.kind!r}")
                records.append(record)
                last_seq = record.seq
        return records

    def write_snapshot(self, seq: int, state_dict: dict) -> None:
        """Atomically replace the snapshot (write temp file, then rename)."""
        payload = json.dumps({"seq": seq, "state": state_dict}, sort_keys=True)
        tmp_path = self.snapshot_path.with_suffix(".json.tmp")
        with open(tmp_path, "w", encoding="utf-8") as handle:
            handle.write(payload)
        os.replace(tmp_path, self.snapshot_path)

    def read_snapshot(self) -> tuple[int, dict] | None:
        if not self.snapshot_path.exists():
            return None
        try:
            with open(self.snapshot_path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
            return (data["seq"], data["state"])
        except (json.JSONDecodeError, KeyError, TypeError):
            raise StoreCorrupt(0, "snapshot file is unreadable")
