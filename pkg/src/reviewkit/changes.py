"""Change requests, change metrics, and commit history imports."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from .diffs import FileDiff
from .errors import ReviewKitError
from .timeutil import format_utc, parse_utc

# Change lifecycle.
DRAFT = "draft"
IN_REVIEW = "in_review"
APPROVED = "approved"
MERGED = "merged"

STATUSES = (DRAFT, IN_REVIEW, APPROVED, MERGED)

# Each status may only move one step forward.
ALLOWED_TRANSITIONS = {
    DRAFT: (IN_REVIEW,),
    IN_REVIEW: (APPROVED,),
    APPROVED: (MERGED,),
    MERGED: (),
}


class DuplicateSha(ReviewKitError):
    http_status = 409

    def __init__(self, sha: str):
        self.sha = sha
        super().__init__(f"duplicate commit sha {sha!r}")


class BadTimestamp(ReviewKitError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"record {index}: unparseable timestamp")


class BadRecord(ReviewKitError):
    def __init__(self, index: int, reason: str):
        self.index = index
        self.reason = reason
        super().__init__(f"record {index}: {reason}")


class BadStatusTransition(ReviewKitError):
    http_status = 409

    def __init__(self, current: str, requested: str):
        self.current = current
        self.requested = requested
        super().__init__(f"cannot move change from {current!r} to {requested!r}")


@dataclass
class GuideAnchor:
    """One stop of the author's walkthrough, pinned to a hunk.

    ``highlight`` optionally narrows the stop to a line range within the
    hunk, as (first, last) 0-based offsets into the hunk's lines.
    """

    index: int
    file_path: str
    hunk_index: int
    explanation: str
    highlight: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "file_path": self.file_path,
            "hunk_index": self.hunk_index,
            "explanation": self.explanation,
            "highlight": list(self.highlight) if self.highlight else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GuideAnchor":
        highlight = data.get("highlight")
        return cls(
            index=data["index"],
            file_path=data["file_path"],
            hunk_index=data["hunk_index"],
            explanation=data.get("explanation", ""),
            highlight=tuple(highlight) if highlight else None,
        )


@dataclass
class ChangeRequest:
    """A unit of review: parsed file diffs plus optional guide anchors."""

    id: str
    repo_id: str
    author_id: str
    title: str
    files: list[FileDiff]
    anchors: list[GuideAnchor] = field(default_factory=list)
    status: str = IN_REVIEW
    created_at: datetime | None = None

    def validate(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        seen: set[str] = set()
        for file in self.files:
            file.validate()
            path = file.display_path
            if path in seen:
                raise ValueError(f"duplicate file path {path!r}")
            seen.add(path)
        units = set(self.coverage_units())
        for anchor in self.anchors:
            if (anchor.file_path, anchor.hunk_index) not in units:
                raise ValueError(
                    f"anchor {anchor.index} references missing hunk "
                    f"({anchor.file_path!r}, {anchor.hunk_index})"
                )

    def coverage_units(self) -> list[tuple[str, int]]:
        """Addressable (path, hunk_index) pairs of this change.

        A file without hunks (binary or metadata-only) still counts as one
        unit at hunk index 0 so it cannot be silently skipped.
        """
        units: list[tuple[str, int]] = []
        for file in self.files:
            path = file.display_path
            if file.hunks:
                units.extend((path, i) for i in range(len(file.hunks)))
            else:
                units.append((path, 0))
        return units

    def transition(self, new_status: str) -> None:
        if new_status not in STATUSES:
            raise BadStatusTransition(self.status, new_status)
        if new_status not in ALLOWED_TRANSITIONS[self.status]:
            raise BadStatusTransition(self.status, new_status)
        self.status = new_status

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "repo_id": self.repo_id,
            "author_id": self.author_id,
            "title": self.title,
            "files": [f.to_dict() for f in self.files],
            "anchors": [a.to_dict() for a in self.anchors],
            "status": self.status,
            "created_at": format_utc(self.created_at) if self.created_at else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChangeRequest":
        created = data.get("created_at")
        return cls(
            id=data["id"],
            repo_id=data["repo_id"],
            author_id=data["author_id"],
            title=data.get("title", ""),
            files=[FileDiff.from_dict(f) for f in data["files"]],
            anchors=[GuideAnchor.from_dict(a) for a in data.get("anchors", [])],
            status=data.get("status", IN_REVIEW),
            created_at=parse_utc(created) if created else None,
        )


@dataclass(frozen=True)
class ChangeMetrics:
    files: int
    hunks: int
    added_lines: int
    deleted_lines: int

    def to_dict(self) -> dict:
        return {
            "files": self.files,
            "hunks": self.hunks,
            "added_lines": self.added_lines,
            "deleted_lines": self.deleted_lines,
        }


def change_metrics(change: ChangeRequest) -> ChangeMetrics:
    """Tally files, hunks, and added/deleted line counts for a change."""
    hunks = 0
    added = 0
    deleted = 0
    for file in change.files:
        hunks += len(file.hunks)
        for hunk in file.hunks:
            added += hunk.added_lines()
            deleted += hunk.deleted_lines()
    return ChangeMetrics(
        files=len(change.files), hunks=hunks, added_lines=added, deleted_lines=deleted
    )


@dataclass(frozen=True)
class CommitRecord:
    """One commit of imported history: who touched which paths, when."""

    sha: str
    author_id: str
    timestamp: datetime
    touched_paths: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "sha": self.sha,
            "author_id": self.author_id,
            "timestamp": format_utc(self.timestamp),
            "touched_paths": list(self.touched_paths),
        }


@dataclass
class CommitHistory:
    """Commits sorted by timestamp ascending, shas unique."""

    commits: list[CommitRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.commits)

    def __iter__(self):
        return iter(self.commits)

    def authors(self) -> list[str]:
        return sorted({c.author_id for c in self.commits})

    def paths(self) -> list[str]:
        seen: set[str] = set()
        for commit in self.commits:
            seen.update(commit.touched_paths)
        return sorted(seen)

    def to_dict(self) -> dict:
        return {"commits": [c.to_dict() for c in self.commits]}

    @classmethod
    def from_dict(cls, data: dict) -> "CommitHistory":
        return import_history(records_from_json(data.get("commits", [])))


def records_from_json(raw: list[dict]) -> list[CommitRecord]:
    """Build commit records from imported JSON objects.

    Raises :class:`BadTimestamp` with the offending record index when a
    timestamp does not parse, and :class:`BadRecord` for structural
    problems (missing keys, empty touched paths).
    """
    records: list[CommitRecord] = []
    for index, item in enumerate(raw):
        if not isinstance(item, dict):
            raise BadRecord(index, "record is not an object")
        for key in ("sha", "author_id", "timestamp", "touched_paths"):
            if key not in item:
                raise BadRecord(index, f"missing key {key!r}")
        paths = item["touched_paths"]
        if not isinstance(paths, list) or not paths:
            raise BadRecord(index, "touched_paths must be a non-empty list")
        try:
            timestamp = parse_utc(str(item["timestamp"]))
        except ValueError:
            raise BadTimestamp(index) from None
        records.append(
            CommitRecord(
                sha=str(item["sha"]),
                author_id=str(item["author_id"]),
                timestamp=timestamp,
                touched_paths=tuple(str(p) for p in paths),
            )
        )
    return records


def import_history(records: list[CommitRecord]) -> CommitHistory:
    """Sort records by timestamp ascending; reject duplicate shas."""
    seen: set[str] = set()
    for record in records:
        if record.sha in seen:
            raise DuplicateSha(record.sha)
        seen.add(record.sha)
    ordered = sorted(records, key=lambda r: (r.timestamp, r.sha))
    return CommitHistory(commits=ordered)
