"""Guided review traversal.

The change author pins ordered anchors to hunks; a reviewer walks them
strictly forward with a single "next" operation. While a walkthrough is
in progress the reviewer cannot post comments (position-only bookmarks
are the escape hatch); after completion a coverage report shows what was
visited and which hunks never had an anchor at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable

from .changes import ChangeRequest, GuideAnchor
from .errors import ReviewKitError
from .timeutil import format_utc, parse_utc

NOT_STARTED = "not_started"
IN_PROGRESS = "in_progress"
COMPLETED = "completed"

SESSION_STATES = (NOT_STARTED, IN_PROGRESS, COMPLETED)

# An in_progress session untouched for this long reverts to not_started.
DEFAULT_STALE_DAYS = 7

# Reasons returned by can_comment.
REASON_NO_GUIDE = "no_guide"
REASON_NOT_STARTED = "guide_not_started"
REASON_COMPLETED = "guide_completed"
REASON_IN_PROGRESS = "guide_in_progress"


class EmptyGuide(ReviewKitError):
    def __init__(self):
        super().__init__("a guide needs at least one anchor")


class DanglingAnchor(ReviewKitError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"anchor {index} references a hunk not in the change")


class BadAnchorIndex(ReviewKitError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"anchor at position {index} breaks the 0..n-1 ordering")


class AuthorCannotReview(ReviewKitError):
    http_status = 403

    def __init__(self):
        super().__init__("the change author cannot review their own change")


class SessionAlreadyActive(ReviewKitError):
    http_status = 409

    def __init__(self, reviewer_id: str, change_id: str):
        self.reviewer_id = reviewer_id
        self.change_id = change_id
        super().__init__(
            f"reviewer {reviewer_id!r} already has an active session on "
            f"change {change_id!r}"
        )


class NotInProgress(ReviewKitError):
    http_status = 409

    def __init__(self, state: str):
        self.state = state
        super().__init__(f"session is {state}, not in_progress")


@dataclass
class Guide:
    """Ordered anchors for one change plus the hunks no anchor covers."""

    change_id: str
    anchors: list[GuideAnchor]
    unanchored: list[tuple[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "change_id": self.change_id,
            "anchors": [a.to_dict() for a in self.anchors],
            "unanchored": [list(u) for u in self.unanchored],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Guide":
        return cls(
            change_id=data["change_id"],
            anchors=[GuideAnchor.from_dict(a) for a in data["anchors"]],
            unanchored=[(p, h) for p, h in data.get("unanchored", [])],
        )


@dataclass
class GuideSession:
    """One reviewer's walk through a guide."""

    id: str
    change_id: str
    reviewer_id: str
    cursor: int = 0
    visited: list[bool] = field(default_factory=list)
    state: str = NOT_STARTED
    started_at: datetime | None = None
    completed_at: datetime | None = None
    last_activity_at: datetime | None = None
    bookmarks: list[tuple[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "change_id": self.change_id,
            "reviewer_id": self.reviewer_id,
            "cursor": self.cursor,
            "visited": list(self.visited),
            "state": self.state,
            "started_at": format_utc(self.started_at) if self.started_at else None,
            "completed_at": (
                format_utc(self.completed_at) if self.completed_at else None
            ),
            "last_activity_at": (
                format_utc(self.last_activity_at) if self.last_activity_at else None
            ),
            "bookmarks": [list(b) for b in self.bookmarks],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GuideSession":
        def _ts(key: str) -> datetime | None:
            raw = data.get(key)
            return parse_utc(raw) if raw else None

        return cls(
            id=data["id"],
            change_id=data["change_id"],
            reviewer_id=data["reviewer_id"],
            cursor=data.get("cursor", 0),
            visited=list(data.get("visited", [])),
            state=data.get("state", NOT_STARTED),
            started_at=_ts("started_at"),
            completed_at=_ts("completed_at"),
            last_activity_at=_ts("last_activity_at"),
            bookmarks=[(p, int(line)) for p, line in data.get("bookmarks", [])],
        )


@dataclass(frozen=True)
class CoverageReport:
    """What a walkthrough covered, and what the guide itself never covered."""

    anchors_total: int
    anchors_visited: int
    unvisited_anchors: tuple[int, ...]
    unanchored_hunks: tuple[tuple[str, int], ...]
    duration_seconds: float | None

    def to_dict(self) -> dict:
        return {
            "anchors_total": self.anchors_total,
            "anchors_visited": self.anchors_visited,
            "unvisited_anchors": list(self.unvisited_anchors),
            "unanchored_hunks": [list(u) for u in self.unanchored_hunks],
            "duration_seconds": self.duration_seconds,
        }


def create_guide(change: ChangeRequest, anchors: list[GuideAnchor]) -> Guide:
    """Validate anchors against the change and record coverage gaps."""
    if not anchors:
        raise EmptyGuide()
    units = change.coverage_units()
    unit_set = set(units)
    anchored: set[tuple[str, int]] = set()
    for position, anchor in enumerate(anchors):
        if anchor.index != position:
            raise BadAnchorIndex(position)
        key = (anchor.file_path, anchor.hunk_index)
        if key not in unit_set:
            raise DanglingAnchor(anchor.index)
        anchored.add(key)
    unanchored = [u for u in units if u not in anchored]
    return Guide(change_id=change.id, anchors=list(anchors), unanchored=unanchored)


def is_stale(
    session: GuideSession, now: datetime, stale_days: int = DEFAULT_STALE_DAYS
) -> bool:
    if session.state != IN_PROGRESS or session.last_activity_at is None:
        return False
    return now - session.last_activity_at > timedelta(days=stale_days)


def reset_if_stale(
    session: GuideSession, now: datetime, stale_days: int = DEFAULT_STALE_DAYS
) -> bool:
    """Revert an abandoned in_progress session to not_started."""
    if not is_stale(session, now, stale_days):
        return False
    session.state = NOT_STARTED
    session.cursor = 0
    session.visited = [False] * len(session.visited)
    session.started_at = None
    session.completed_at = None
    return True


def start_session(
    guide: Guide,
    change: ChangeRequest,
    reviewer_id: str,
    session_id: str,
    now: datetime,
    existing: Iterable[GuideSession] = (),
    stale_days: int = DEFAULT_STALE_DAYS,
) -> GuideSession:
    """Open a walkthrough at the first anchor.

    ``existing`` are this reviewer's prior sessions on the change; a
    non-stale in_progress one blocks a second start.
    """
    if reviewer_id == change.author_id:
        raise AuthorCannotReview()
    for other in existing:
        if other.reviewer_id != reviewer_id or other.change_id != guide.change_id:
            continue
        if other.state == IN_PROGRESS and not is_stale(other, now, stale_days):
            raise SessionAlreadyActive(reviewer_id, guide.change_id)
    visited = [False] * len(guide.anchors)
    visited[0] = True
    return GuideSession(
        id=session_id,
        change_id=guide.change_id,
        reviewer_id=reviewer_id,
        cursor=0,
        visited=visited,
        state=IN_PROGRESS,
        started_at=now,
        last_activity_at=now,
    )


def advance(session: GuideSession, now: datetime) -> GuideSession:
    """Move to the next anchor; at the last anchor, complete the session.

    The cursor never decreases: completing leaves it on the last anchor.
    """
    if session.state != IN_PROGRESS:
        raise NotInProgress(session.state)
    last = len(session.visited) - 1
    if session.cursor >= last:
        session.state = COMPLETED
        session.completed_at = now
    else:
        session.cursor += 1
        session.visited[session.cursor] = True
    session.last_activity_at = now
    return session


def add_bookmark(
    session: GuideSession, file_path: str, line: int, now: datetime
) -> GuideSession:
    """Remember a position to come back to; duplicates are kept once."""
    if session.state != IN_PROGRESS:
        raise NotInProgress(session.state)
    mark = (file_path, line)
    if mark not in session.bookmarks:
        session.bookmarks.append(mark)
    session.last_activity_at = now
    return session


def can_comment(
    sessions: Iterable[GuideSession],
    now: datetime,
    stale_days: int = DEFAULT_STALE_DAYS,
) -> tuple[bool, str]:
    """Whether a reviewer may comment, given their sessions on the change.

    Blocked exactly while a non-stale walkthrough is in progress; stale
    sessions count as abandoned and do not block.
    """
    latest_reason = REASON_NO_GUIDE
    for session in sessions:
        if session.state == IN_PROGRESS and not is_stale(session, now, stale_days):
            return False, REASON_IN_PROGRESS
        if session.state == COMPLETED:
            latest_reason = REASON_COMPLETED
        elif latest_reason == REASON_NO_GUIDE:
            latest_reason = REASON_NOT_STARTED
    return True, latest_reason


def completion_report(session: GuideSession, guide: Guide) -> CoverageReport:
    """Summarize coverage: visited anchors and hunks the guide never held."""
    visited_count = sum(1 for flag in session.visited if flag)
    unvisited = tuple(i for i, flag in enumerate(session.visited) if not flag)
    duration: float | None = None
    if session.completed_at is not None and session.started_at is not None:
        duration = (session.completed_at - session.started_at).total_seconds()
    return CoverageReport(
        anchors_total=len(guide.anchors),
        anchors_visited=visited_count,
        unvisited_anchors=unvisited,
        unanchored_hunks=tuple(guide.unanchored),
        duration_seconds=duration,
    )


def current_anchor(guide: Guide, session: GuideSession) -> GuideAnchor:
    """The anchor the session is focused on right now."""
    return guide.anchors[session.cursor]
