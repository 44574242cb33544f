"""Review load caps, fatigue-window scheduling, and halt reminders.

Assignment prefers an immediate start for the best-ranked reviewer who
has spare capacity and whose local clock sits outside every configured
fatigue window. When nobody qualifies, the best-ranked reviewer with a
bookable calendar gap gets a deferred slot instead. Activity timers turn
reported focus time into a halt reminder every time a threshold multiple
is crossed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, time, timedelta, timezone
from typing import Iterable, Sequence

from .errors import ReviewKitError
from .timeutil import ensure_utc, format_utc, parse_utc

DEFAULT_MAX_CONCURRENT = 3
DEFAULT_THRESHOLD_MINUTES = 60
DEFAULT_SLOT_MINUTES = 60
DEFAULT_HORIZON_DAYS = 7


class NoSchedulableCandidate(ReviewKitError):
    http_status = 409

    def __init__(self, horizon_days: int):
        self.horizon_days = horizon_days
        super().__init__(
            f"no candidate can take the review within {horizon_days} days"
        )


class NotAssigned(ReviewKitError):
    http_status = 404

    def __init__(self, change_id: str):
        self.change_id = change_id
        super().__init__(f"change {change_id!r} is not assigned to this reviewer")


class NegativeDelta(ReviewKitError):
    def __init__(self):
        super().__init__("heartbeat delta must be non-negative")


@dataclass(frozen=True)
class FatigueWindow:
    """A local time-of-day interval to keep review starts out of.

    The interval is half-open: a clock value equal to ``end`` is outside.
    """

    label: str
    start: time
    end: time

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(
                f"window {self.label!r}: start must be before end within a day"
            )

    def contains(self, clock: time) -> bool:
        return self.start <= clock < self.end

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "start": self.start.isoformat(timespec="minutes"),
            "end": self.end.isoformat(timespec="minutes"),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FatigueWindow":
        return cls(
            label=data["label"],
            start=time.fromisoformat(data["start"]),
            end=time.fromisoformat(data["end"]),
        )


DEFAULT_FATIGUE_WINDOWS = (
    FatigueWindow("after lunch", time(12, 0), time(13, 30)),
    FatigueWindow("end of day", time(16, 30), time(18, 0)),
)


@dataclass
class ReviewerSchedule:
    """Capacity and calendar state for one reviewer."""

    reviewer_id: str
    max_concurrent: int = DEFAULT_MAX_CONCURRENT
    active_assignments: set[str] = field(default_factory=set)
    calendar_slots: list[tuple[datetime, datetime]] = field(default_factory=list)
    tz_offset_minutes: int = 0

    def has_capacity(self) -> bool:
        return len(self.active_assignments) < self.max_concurrent

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "max_concurrent": self.max_concurrent,
            "active_assignments": sorted(self.active_assignments),
            "calendar_slots": [
                [format_utc(s), format_utc(e)] for s, e in self.calendar_slots
            ],
            "tz_offset_minutes": self.tz_offset_minutes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReviewerSchedule":
        return cls(
            reviewer_id=data["reviewer_id"],
            max_concurrent=data.get("max_concurrent", DEFAULT_MAX_CONCURRENT),
            active_assignments=set(data.get("active_assignments", [])),
            calendar_slots=[
                (parse_utc(s), parse_utc(e))
                for s, e in data.get("calendar_slots", [])
            ],
            tz_offset_minutes=data.get("tz_offset_minutes", 0),
        )


@dataclass(frozen=True)
class Assignment:
    """The outcome of one assignment decision."""

    change_id: str
    reviewer_id: str
    scheduled_slot: tuple[datetime, datetime] | None
    assigned_at: datetime

    @property
    def immediate(self) -> bool:
        return self.scheduled_slot is None

    def to_dict(self) -> dict:
        slot = None
        if self.scheduled_slot is not None:
            slot = [format_utc(self.scheduled_slot[0]),
                    format_utc(self.scheduled_slot[1])]
        return {
            "change_id": self.change_id,
            "reviewer_id": self.reviewer_id,
            "scheduled_slot": slot,
            "assigned_at": format_utc(self.assigned_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Assignment":
        slot = data.get("scheduled_slot")
        return cls(
            change_id=data["change_id"],
            reviewer_id=data["reviewer_id"],
            scheduled_slot=(
                (parse_utc(slot[0]), parse_utc(slot[1])) if slot else None
            ),
            assigned_at=parse_utc(data["assigned_at"]),
        )


def _to_local(moment: datetime, offset_minutes: int) -> datetime:
    """UTC instant -> naive local wall clock."""
    return ensure_utc(moment).replace(tzinfo=None) + timedelta(
        minutes=offset_minutes
    )


def _to_utc(local: datetime, offset_minutes: int) -> datetime:
    """Naive local wall clock -> UTC instant."""
    return (local - timedelta(minutes=offset_minutes)).replace(tzinfo=timezone.utc)


def local_clock(now: datetime, offset_minutes: int) -> time:
    return _to_local(now, offset_minutes).time()


def in_fatigue_window(
    now: datetime, offset_minutes: int, windows: Sequence[FatigueWindow]
) -> FatigueWindow | None:
    clock = local_clock(now, offset_minutes)
    for window in windows:
        if window.contains(clock):
            return window
    return None


def _blocking_intervals(
    schedule: ReviewerSchedule,
    windows: Sequence[FatigueWindow],
    local_from: datetime,
    local_until: datetime,
) -> list[tuple[datetime, datetime]]:
    """Window occurrences and busy calendar slots, in local wall time."""
    blocks: list[tuple[datetime, datetime]] = []
    day = local_from.date() - timedelta(days=1)
    last_day = local_until.date() + timedelta(days=1)
    while day <= last_day:
        for window in windows:
            blocks.append(
                (
                    datetime.combine(day, window.start),
                    datetime.combine(day, window.end),
                )
            )
        day += timedelta(days=1)
    for busy_start, busy_end in schedule.calendar_slots:
        blocks.append(
            (
                _to_local(busy_start, schedule.tz_offset_minutes),
                _to_local(busy_end, schedule.tz_offset_minutes),
            )
        )
    return blocks


def find_slot(
    schedule: ReviewerSchedule,
    windows: Sequence[FatigueWindow],
    now: datetime,
    slot_minutes: int = DEFAULT_SLOT_MINUTES,
    horizon_days: int = DEFAULT_HORIZON_DAYS,
) -> tuple[datetime, datetime] | None:
    """Earliest start ≥ now (within the horizon) for a clear slot.

    The whole slot must avoid fatigue windows (in the reviewer's local
    time) and must not overlap existing calendar bookings. The earliest
    feasible start is either ``now`` itself or the end of some blocking
    interval, so only those instants need checking.
    """
    length = timedelta(minutes=slot_minutes)
    local_now = _to_local(now, schedule.tz_offset_minutes)
    local_horizon = local_now + timedelta(days=horizon_days)
    blocks = _blocking_intervals(schedule, windows, local_now, local_horizon)

    candidates = {local_now}
    for _, block_end in blocks:
        if local_now <= block_end <= local_horizon:
            candidates.add(block_end)
    for start in sorted(candidates):
        if start > local_horizon:
            break
        end = start + length
        if any(bs < end and start < be for bs, be in blocks):
            continue
        return (
            _to_utc(start, schedule.tz_offset_minutes),
            _to_utc(end, schedule.tz_offset_minutes),
        )
    return None


def decide_assignment(
    change_id: str,
    ranked_candidates: Sequence[tuple[str, float]],
    schedules: dict[str, ReviewerSchedule],
    fatigue_windows: Sequence[FatigueWindow],
    now: datetime,
    slot_minutes: int = DEFAULT_SLOT_MINUTES,
    horizon_days: int = DEFAULT_HORIZON_DAYS,
) -> Assignment:
    """Pick a reviewer without mutating any schedule.

    First pass: best-ranked candidate with spare capacity whose local time
    is outside every window gets an immediate assignment. Second pass:
    best-ranked candidate with a bookable gap gets a deferred slot.
    """
    for reviewer_id, _ in ranked_candidates:
        schedule = schedules[reviewer_id]
        if not schedule.has_capacity():
            continue
        if in_fatigue_window(now, schedule.tz_offset_minutes, fatigue_windows):
            continue
        return Assignment(
            change_id=change_id,
            reviewer_id=reviewer_id,
            scheduled_slot=None,
            assigned_at=now,
        )
    for reviewer_id, _ in ranked_candidates:
        schedule = schedules[reviewer_id]
        slot = find_slot(schedule, fatigue_windows, now, slot_minutes, horizon_days)
        if slot is not None:
            return Assignment(
                change_id=change_id,
                reviewer_id=reviewer_id,
                scheduled_slot=slot,
                assigned_at=now,
            )
    raise NoSchedulableCandidate(horizon_days)


def commit_assignment(schedule: ReviewerSchedule, assignment: Assignment) -> None:
    """Apply a decided assignment to the chosen reviewer's schedule."""
    if assignment.scheduled_slot is None:
        schedule.active_assignments.add(assignment.change_id)
    else:
        schedule.calendar_slots.append(assignment.scheduled_slot)
        schedule.calendar_slots.sort()


def assign_review(
    change_id: str,
    ranked_candidates: Sequence[tuple[str, float]],
    schedules: dict[str, ReviewerSchedule],
    fatigue_windows: Sequence[FatigueWindow],
    now: datetime,
    slot_minutes: int = DEFAULT_SLOT_MINUTES,
    horizon_days: int = DEFAULT_HORIZON_DAYS,
) -> Assignment:
    """Decide and book in one step."""
    assignment = decide_assignment(
        change_id, ranked_candidates, schedules, fatigue_windows, now,
        slot_minutes, horizon_days,
    )
    commit_assignment(schedules[assignment.reviewer_id], assignment)
    return assignment


def release_assignment(schedule: ReviewerSchedule, change_id: str) -> ReviewerSchedule:
    if change_id not in schedule.active_assignments:
        raise NotAssigned(change_id)
    schedule.active_assignments.discard(change_id)
    return schedule


@dataclass
class ActivityTimer:
    """Accumulated focused review time for one session."""

    session_id: str
    accumulated: timedelta = timedelta(0)
    threshold: timedelta = timedelta(minutes=DEFAULT_THRESHOLD_MINUTES)
    reminders_sent: int = 0
    last_heartbeat: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "accumulated_seconds": self.accumulated.total_seconds(),
            "threshold_seconds": self.threshold.total_seconds(),
            "reminders_sent": self.reminders_sent,
            "last_heartbeat": (
                format_utc(self.last_heartbeat) if self.last_heartbeat else None
            ),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ActivityTimer":
        last = data.get("last_heartbeat")
        return cls(
            session_id=data["session_id"],
            accumulated=timedelta(seconds=data.get("accumulated_seconds", 0.0)),
            threshold=timedelta(
                seconds=data.get(
                    "threshold_seconds", DEFAULT_THRESHOLD_MINUTES * 60
                )
            ),
            reminders_sent=data.get("reminders_sent", 0),
            last_heartbeat=parse_utc(last) if last else None,
        )


@dataclass(frozen=True)
class HaltReminder:
    session_id: str
    ordinal: int
    message: str

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "ordinal": self.ordinal,
            "message": self.message,
        }


def heartbeat(
    timer: ActivityTimer, now: datetime, delta: timedelta
) -> tuple[ActivityTimer, list[HaltReminder]]:
    """Add focused time; emit one reminder per newly crossed threshold.

    Replays of an already processed heartbeat (``now`` not after the last
    recorded one) leave the timer untouched and emit nothing, so clients
    may retry after connection loss without double counting.
    """
    if delta < timedelta(0):
        raise NegativeDelta()
    if timer.last_heartbeat is not None and now <= timer.last_heartbeat:
        return timer, []
    timer.accumulated += delta
    timer.last_heartbeat = now
    crossings = int(timer.accumulated // timer.threshold)
    reminders: list[HaltReminder] = []
    for ordinal in range(timer.reminders_sent + 1, crossings + 1):
        minutes = int(
            (timer.threshold.total_seconds() * ordinal) // 60
        )
        reminders.append(
            HaltReminder(
                session_id=timer.session_id,
                ordinal=ordinal,
                message=(
                    f"You have been reviewing for about {minutes} minutes; "
                    "consider pausing and coming back fresh."
                ),
            )
        )
    timer.reminders_sent = crossings
    return timer, reminders


def windows_from_config(raw: Iterable[dict]) -> tuple[FatigueWindow, ...]:
    return tuple(FatigueWindow.from_dict(item) for item in raw)
