"""Event-sourced service core.

Every mutation follows the same path: validate against current state,
build an event, apply it to the in-memory state, and append it to the
log. Applying an event is deterministic given the state that precedes
it, so replaying the log from an empty state reconstructs exactly the
live state — the property the store's durability rests on.
"""

from __future__ import annotations

import copy
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .. import scenarios
from ..changes import (
    ChangeRequest,
    CommitHistory,
    GuideAnchor,
    IN_REVIEW,
    import_history,
    records_from_json,
)
from ..comments import (
    LintReport,
    StructuredComment,
    compose_raw,
    lint_comment,
    parse_sections,
    search_snippets,
    snippet_lines,
)
from ..diffs import parse_unified_diff
from ..errors import ReviewKitError
from ..experts import (
    ExpertRequest,
    RequestLedger,
    build_profiles,
    rank_reviewers,
)
from ..guide import (
    CoverageReport,
    Guide,
    GuideSession,
    IN_PROGRESS,
    NotInProgress,
    add_bookmark,
    advance,
    can_comment,
    completion_report,
    create_guide,
    current_anchor,
    start_session,
)
from ..scheduling import (
    ActivityTimer,
    Assignment,
    HaltReminder,
    NegativeDelta,
    NotAssigned,
    ReviewerSchedule,
    commit_assignment,
    decide_assignment,
    heartbeat,
    release_assignment,
)
from ..timeutil import utc_now
from .config import ServiceConfig
from .events import (
    ADVANCED,
    ASSIGNED,
    ASSIGNMENT_RELEASED,
    BOOKMARK_ADDED,
    CHANGE_CREATED,
    COMMENT_POSTED,
    EXPERT_REQUESTED,
    EventLog,
    EventRecord,
    GUIDE_STARTED,
    HEARTBEAT_RECORDED,
    HISTORY_IMPORTED,
    LINT_ISSUED,
    REMINDER_SENT,
    StoreCorrupt,
)


class UnknownChange(ReviewKitError):
    http_status = 404

    def __init__(self, change_id: str):
        super().__init__(f"unknown change {change_id!r}")


class UnknownSession(ReviewKitError):
    http_status = 404

    def __init__(self, session_id: str):
        super().__init__(f"unknown guide session {session_id!r}")


class NoGuide(ReviewKitError):
    http_status = 404

    def __init__(self, change_id: str):
        super().__init__(f"change {change_id!r} has no guide")


class GuideInProgress(ReviewKitError):
    http_status = 409

    def __init__(self, reviewer_id: str, change_id: str):
        super().__init__(
            f"reviewer {reviewer_id!r} has a guide in progress on change "
            f"{change_id!r}; comments unlock when the walkthrough is done"
        )


class DuplicateChange(ReviewKitError):
    http_status = 409

    def __init__(self, change_id: str):
        super().__init__(f"change {change_id!r} already exists")


# Mutations carrying a debiasing feature carry the scenario that feature
# remedies; plumbing events carry none.
KIND_SCENARIOS: dict[str, str | None] = {
    CHANGE_CREATED: None,
    GUIDE_STARTED: scenarios.FEATURE_SCENARIOS[scenarios.F_GUIDE],
    ADVANCED: scenarios.FEATURE_SCENARIOS[scenarios.F_GUIDE],
    BOOKMARK_ADDED: scenarios.FEATURE_SCENARIOS[scenarios.F_GUIDE],
    COMMENT_POSTED: scenarios.FEATURE_SCENARIOS[scenarios.F_COMMENT_SCAFFOLD],
    LINT_ISSUED: scenarios.FEATURE_SCENARIOS[scenarios.F_COMMENT_LINT],
    HISTORY_IMPORTED: None,
    EXPERT_REQUESTED: scenarios.FEATURE_SCENARIOS[scenarios.F_EXPERT_FEEDBACK],
    ASSIGNED: scenarios.FEATURE_SCENARIOS[scenarios.F_REVIEW_CAPS],
    ASSIGNMENT_RELEASED: None,
    HEARTBEAT_RECORDED: None,
    REMINDER_SENT: scenarios.FEATURE_SCENARIOS[scenarios.F_HALT_REMINDERS],
}


@dataclass
class State:
    """Everything the service knows, reconstructible from the log."""

    changes: dict[str, ChangeRequest] = field(default_factory=dict)
    guides: dict[str, Guide] = field(default_factory=dict)
    sessions: dict[str, GuideSession] = field(default_factory=dict)
    comments: dict[str, StructuredComment] = field(default_factory=dict)
    lint_reports: dict[str, LintReport] = field(default_factory=dict)
    history: CommitHistory = field(default_factory=CommitHistory)
    ledger: RequestLedger = field(default_factory=RequestLedger)
    schedules: dict[str, ReviewerSchedule] = field(default_factory=dict)
    timers: dict[str, ActivityTimer] = field(default_factory=dict)
    assignments: list[Assignment] = field(default_factory=list)
    notices: list[dict] = field(default_factory=list)

    @classmethod
    def empty(cls, config: ServiceConfig) -> "State":
        return cls(
            ledger=RequestLedger(
                cap=config.expert_request_cap,
                expiry_days=config.expert_request_expiry_days,
            )
        )

    def to_dict(self) -> dict:
        return {
            "changes": {k: v.to_dict() for k, v in self.changes.items()},
            "guides": {k: v.to_dict() for k, v in self.guides.items()},
            "sessions": {k: v.to_dict() for k, v in self.sessions.items()},
            "comments": {k: v.to_dict() for k, v in self.comments.items()},
            "lint_reports": {k: v.to_dict() for k, v in self.lint_reports.items()},
            "history": self.history.to_dict(),
            "ledger": self.ledger.to_dict(),
            "schedules": {k: v.to_dict() for k, v in self.schedules.items()},
            "timers": {k: v.to_dict() for k, v in self.timers.items()},
            "assignments": [a.to_dict() for a in self.assignments],
            "notices": [dict(n) for n in self.notices],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "State":
        return cls(
            changes={
                k: ChangeRequest.from_dict(v)
                for k, v in data.get("changes", {}).items()
            },
            guides={
                k: Guide.from_dict(v) for k, v in data.get("guides", {}).items()
            },
            sessions={
                k: GuideSession.from_dict(v)
                for k, v in data.get("sessions", {}).items()
            },
            comments={
                k: StructuredComment.from_dict(v)
                for k, v in data.get("comments", {}).items()
            },
            lint_reports={
                k: LintReport.from_dict(v)
                for k, v in data.get("lint_reports", {}).items()
            },
            history=CommitHistory.from_dict(data.get("history", {"commits": []})),
            ledger=RequestLedger.from_dict(
                data.get("ledger", {"cap": 3, "expiry_days": 14, "requests": []})
            ),
            schedules={
                k: ReviewerSchedule.from_dict(v)
                for k, v in data.get("schedules", {}).items()
            },
            timers={
                k: ActivityTimer.from_dict(v)
                for k, v in data.get("timers", {}).items()
            },
            assignments=[
                Assignment.from_dict(a) for a in data.get("assignments", [])
            ],
            notices=[dict(n) for n in data.get("notices", [])],
        )

    def fingerprint(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _get_or_create_schedule(
    state: State, reviewer_id: str, config: ServiceConfig
) -> ReviewerSchedule:
    schedule = state.schedules.get(reviewer_id)
    if schedule is None:
        schedule = ReviewerSchedule(
            reviewer_id, max_concurrent=config.max_concurrent_reviews
        )
        state.schedules[reviewer_id] = schedule
    return schedule


def _get_or_create_timer(
    state: State, session_id: str, config: ServiceConfig
) -> ActivityTimer:
    timer = state.timers.get(session_id)
    if timer is None:
        timer = ActivityTimer(
            session_id,
            threshold=timedelta(minutes=config.reminder_threshold_minutes),
        )
        state.timers[session_id] = timer
    return timer


def apply_event(state: State, record: EventRecord, config: ServiceConfig) -> None:
    """Deterministic state transition for one event."""
    payload = record.payload
    kind = record.kind
    if kind == CHANGE_CREATED:
        change = ChangeRequest.from_dict(payload["change"])
        state.changes[change.id] = change
        if change.anchors:
            state.guides[change.id] = create_guide(change, change.anchors)
    elif kind == GUIDE_STARTED:
        change = state.changes[payload["change_id"]]
        guide = state.guides[payload["change_id"]]
        session = start_session(
            guide,
            change,
            payload["reviewer_id"],
            payload["session_id"],
            record.at,
        )
        state.sessions[session.id] = session
    elif kind == ADVANCED:
        advance(state.sessions[payload["session_id"]], record.at)
    elif kind == BOOKMARK_ADDED:
        add_bookmark(
            state.sessions[payload["session_id"]],
            payload["file_path"],
            payload["line"],
            record.at,
        )
    elif kind == COMMENT_POSTED:
        comment = StructuredComment.from_dict(payload["comment"])
        state.comments[comment.id] = comment
    elif kind == LINT_ISSUED:
        state.lint_reports[payload["comment_id"]] = LintReport.from_dict(
            payload["report"]
        )
    elif kind == HISTORY_IMPORTED:
        new_records = records_from_json(payload["records"])
        state.history = import_history(list(state.history.commits) + new_records)
    elif kind == EXPERT_REQUESTED:
        state.ledger.create(
            request_id=payload["request_id"],
            requester_id=payload["requester_id"],
            expert_id=payload["expert_id"],
            subject=payload["subject"],
            subject_id=payload["subject_id"],
            now=record.at,
        )
    elif kind == ASSIGNED:
        assignment = Assignment.from_dict(payload["assignment"])
        schedule = _get_or_create_schedule(state, assignment.reviewer_id, config)
        commit_assignment(schedule, assignment)
        state.assignments.append(assignment)
    elif kind == ASSIGNMENT_RELEASED:
        release_assignment(
            state.schedules[payload["reviewer_id"]], payload["change_id"]
        )
    elif kind == HEARTBEAT_RECORDED:
        timer = _get_or_create_timer(state, payload["session_id"], config)
        heartbeat(timer, record.at, timedelta(seconds=payload["delta_seconds"]))
    elif kind == REMINDER_SENT:
        state.notices.append(dict(payload["reminder"]))
    else:
        raise StoreCorrupt(record.seq, f"unknown kind {kind!r}")


def replay_events(
    records: list[EventRecord], config: ServiceConfig
) -> State:
    """Fold the log over an empty state."""
    state = State.empty(config)
    for record in records:
        apply_event(state, record, config)
    return state


class ReviewService:
    """Single-writer command layer over the event log.

    ``persist=False`` keeps everything in memory (used heavily by tests);
    otherwise events land in ``config.data_dir`` with periodic snapshots.
    """

    def __init__(self, config: ServiceConfig, persist: bool = True):
        self.config = config
        self._lock = threading.RLock()
        self._log: EventLog | None = EventLog(config.data_dir) if persist else None
        self._events_since_snapshot = 0
        if self._log is not None:
            snapshot = self._log.read_snapshot()
            records = self._log.read_all()
            if snapshot is not None:
                snap_seq, state_dict = snapshot
                self.state = State.from_dict(state_dict)
                tail = [r for r in records if r.seq > snap_seq]
                for record in tail:
                    apply_event(self.state, record, config)
                self._next_seq = max(
                    [snap_seq] + [r.seq for r in records]
                ) + 1
            else:
                self.state = replay_events(records, config)
                self._next_seq = (records[-1].seq + 1) if records else 1
        else:
            self.state = State.empty(config)
            self._next_seq = 1

    # -- event plumbing ---------------------------------------------------

    def _commit(self, kind: str, payload: dict, at: datetime) -> EventRecord:
        record = EventRecord(
            seq=self._next_seq,
            at=at,
            kind=kind,
            payload=payload,
            scenario_tag=KIND_SCENARIOS.get(kind),
        )
        apply_event(self.state, record, self.config)
        if self._log is not None:
            self._log.append(record)
            self._events_since_snapshot += 1
            if self._events_since_snapshot >= self.config.snapshot_every:
                self._log.write_snapshot(record.seq, self.state.to_dict())
                self._events_since_snapshot = 0
        self._next_seq += 1
        return record

    def _now(self, at: datetime | None) -> datetime:
        return at if at is not None else utc_now()

    def verify_replay(self) -> bool:
        """Replay the full log and compare with the live state."""
        if self._log is None:
            return True
        with self._lock:
            replayed = replay_events(self._log.read_all(), self.config)
            return replayed.fingerprint() == self.state.fingerprint()

    # -- changes & guides --------------------------------------------------

    def create_change(
        self,
        *,
        repo_id: str,
        author_id: str,
        title: str,
        diff_text: str,
        anchors: list[dict] | None = None,
        change_id: str | None = None,
        status: str = IN_REVIEW,
        at: datetime | None = None,
    ) -> ChangeRequest:
        with self._lock:
            at = self._now(at)
            files = parse_unified_diff(diff_text)
            if change_id is None:
                n = len(self.state.changes) + 1
                while f"ch-{n}" in self.state.changes:
                    n += 1
                change_id = f"ch-{n}"
            elif change_id in self.state.changes:
                raise DuplicateChange(change_id)
            anchor_objs = [
                GuideAnchor(
                    index=i,
                    file_path=a["file_path"],
                    hunk_index=a["hunk_index"],
                    explanation=a.get("explanation", ""),
                    highlight=tuple(a["highlight"]) if a.get("highlight") else None,
                )
                for i, a in enumerate(anchors or [])
            ]
            change = ChangeRequest(
                id=change_id,
                repo_id=repo_id,
                author_id=author_id,
                title=title,
                files=files,
                anchors=anchor_objs,
                status=status,
                created_at=at,
            )
            change.validate()
            if anchor_objs:
                create_guide(change, anchor_objs)
            self._commit(CHANGE_CREATED, {"change": change.to_dict()}, at)
            return self.state.changes[change_id]

    def get_change(self, change_id: str) -> ChangeRequest:
        change = self.state.changes.get(change_id)
        if change is None:
            raise UnknownChange(change_id)
        return change

    def get_guide(self, change_id: str) -> Guide:
        self.get_change(change_id)
        guide = self.state.guides.get(change_id)
        if guide is None:
            raise NoGuide(change_id)
        return guide

    def start_guide_session(
        self, change_id: str, reviewer_id: str, at: datetime | None = None
    ) -> GuideSession:
        with self._lock:
            at = self._now(at)
            change = self.get_change(change_id)
            guide = self.get_guide(change_id)
            existing = [
                s
                for s in self.state.sessions.values()
                if s.change_id == change_id and s.reviewer_id == reviewer_id
            ]
            session_id = f"gs-{len(self.state.sessions) + 1}"
            # Dry-run for validation (author check, double-start check).
            start_session(
                guide, change, reviewer_id, session_id, at,
                existing=existing, stale_days=self.config.stale_session_days,
            )
            self._commit(
                GUIDE_STARTED,
                {
                    "session_id": session_id,
                    "change_id": change_id,
                    "reviewer_id": reviewer_id,
                },
                at,
            )
            return self.state.sessions[session_id]

    def get_session(self, session_id: str) -> GuideSession:
        session = self.state.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def advance_session(
        self, session_id: str, at: datetime | None = None
    ) -> GuideSession:
        with self._lock:
            at = self._now(at)
            session = self.get_session(session_id)
            if session.state != IN_PROGRESS:
                raise NotInProgress(session.state)
            self._commit(ADVANCED, {"session_id": session_id}, at)
            return self.state.sessions[session_id]

    def add_session_bookmark(
        self,
        session_id: str,
        file_path: str,
        line: int,
        at: datetime | None = None,
    ) -> GuideSession:
        with self._lock:
            at = self._now(at)
            session = self.get_session(session_id)
            if session.state != IN_PROGRESS:
                raise NotInProgress(session.state)
            self._commit(
                BOOKMARK_ADDED,
                {"session_id": session_id, "file_path": file_path, "line": line},
                at,
            )
            return self.state.sessions[session_id]

    def session_report(self, session_id: str) -> CoverageReport:
        session = self.get_session(session_id)
        guide = self.get_guide(session.change_id)
        return completion_report(session, guide)

    def session_anchor(self, session_id: str) -> GuideAnchor:
        session = self.get_session(session_id)
        guide = self.get_guide(session.change_id)
        return current_anchor(guide, session)

    # -- comments ------------------------------------------------------------

    def comment_gate(
        self, change_id: str, reviewer_id: str, at: datetime | None = None
    ) -> tuple[bool, str]:
        at = self._now(at)
        self.get_change(change_id)
        sessions = [
            s
            for s in self.state.sessions.values()
            if s.change_id == change_id and s.reviewer_id == reviewer_id
        ]
        return can_comment(sessions, at, self.config.stale_session_days)

    def post_comment(
        self,
        change_id: str,
        author_id: str,
        *,
        problem: str = "",
        rationale: str = "",
        suggestions: list[str] | None = None,
        raw_text: str | None = None,
        file_path: str | None = None,
        line: int | None = None,
        at: datetime | None = None,
    ) -> tuple[StructuredComment, LintReport]:
        with self._lock:
            at = self._now(at)
            self.get_change(change_id)
            allowed, _reason = self.comment_gate(change_id, author_id, at)
            if not allowed:
                raise GuideInProgress(author_id, change_id)
            suggestions = list(suggestions or [])
            if raw_text is not None and not (problem or rationale or suggestions):
                parsed = parse_sections(raw_text)
                problem = parsed.problem
                rationale = parsed.rationale
                suggestions = list(parsed.suggestions)
            raw = (
                raw_text
                if raw_text is not None
                else compose_raw(problem, rationale, suggestions)
            )
            comment_id = f"cm-{len(self.state.comments) + 1}"
            comment = StructuredComment(
                id=comment_id,
                change_id=change_id,
                author_id=author_id,
                problem=problem,
                rationale=rationale,
                suggestions=suggestions,
                file_path=file_path,
                line=line,
                raw_text=raw,
                created_at=at,
            )
            report = lint_comment(
                raw, structured=comment, patterns=self.config.destructive_patterns
            )
            self._commit(COMMENT_POSTED, {"comment": comment.to_dict()}, at)
            self._commit(
                LINT_ISSUED,
                {"comment_id": comment_id, "report": report.to_dict()},
                at,
            )
            return self.state.comments[comment_id], report

    def search_change_snippets(self, change_id: str, query: str, k: int = 5):
        change = self.get_change(change_id)
        refs = search_snippets(query, change, k)
        return [
            {"ref": ref.to_dict(), "lines": snippet_lines(change, ref)}
            for ref in refs
        ]

    # -- history & experts -----------------------------------------------

    def import_commits(
        self, records_raw: list[dict], at: datetime | None = None
    ) -> CommitHistory:
        with self._lock:
            at = self._now(at)
            new_records = records_from_json(records_raw)
            import_history(list(self.state.history.commits) + new_records)
            self._commit(HISTORY_IMPORTED, {"records": records_raw}, at)
            return self.state.history

    def rank_experts(
        self, change_id: str, k: int = 5, at: datetime | None = None
    ) -> list[tuple[str, float]]:
        at = self._now(at)
        change = self.get_change(change_id)
        profiles = build_profiles(
            self.state.history,
            at,
            self.config.expertise_half_life_days,
            paths=[file.display_path for file in change.files],
        )
        return rank_reviewers(change, profiles, k=k)

    def request_expert(
        self,
        requester_id: str,
        expert_id: str,
        subject: str,
        subject_id: str,
        at: datetime | None = None,
    ) -> ExpertRequest:
        with self._lock:
            at = self._now(at)

            def subject_exists(kind: str, sid: str) -> bool:
                if kind == "comment":
                    return sid in self.state.comments
                return sid in self.state.changes

            # Dry-run the ledger rules on a copy so validation failures
            # leave no trace in state or log.
            probe = copy.deepcopy(self.state.ledger)
            request_id = f"er-{len(self.state.ledger.requests) + 1}"
            probe.create(
                request_id=request_id,
                requester_id=requester_id,
                expert_id=expert_id,
                subject=subject,
                subject_id=subject_id,
                now=at,
                subject_exists=subject_exists,
            )
            self._commit(
                EXPERT_REQUESTED,
                {
                    "request_id": request_id,
                    "requester_id": requester_id,
                    "expert_id": expert_id,
                    "subject": subject,
                    "subject_id": subject_id,
                },
                at,
            )
            for request in self.state.ledger.requests:
                if request.id == request_id:
                    return request
            raise RuntimeError("request vanished after commit")  # pragma: no cover

    # -- assignment & reminders -------------------------------------------

    def assign_change(
        self, change_id: str, at: datetime | None = None
    ) -> Assignment:
        with self._lock:
            at = self._now(at)
            change = self.get_change(change_id)
            profiles = build_profiles(
                self.state.history,
                at,
                self.config.expertise_half_life_days,
                paths=[file.display_path for file in change.files],
            )
            ranked = rank_reviewers(
                change, profiles, k=max(len(profiles), 1)
            )
            view = {
                reviewer_id: self.state.schedules.get(reviewer_id)
                or ReviewerSchedule(
                    reviewer_id,
                    max_concurrent=self.config.max_concurrent_reviews,
                )
                for reviewer_id, _ in ranked
            }
            assignment = decide_assignment(
                change_id,
                ranked,
                view,
                self.config.fatigue_windows,
                at,
                self.config.slot_minutes,
                self.config.deferral_horizon_days,
            )
            self._commit(
                ASSIGNED,
                {
                    "assignment": assignment.to_dict(),
                    "candidates": [[r, s] for r, s in ranked],
                },
                at,
            )
            return assignment

    def release_change(
        self, change_id: str, reviewer_id: str, at: datetime | None = None
    ) -> None:
        with self._lock:
            at = self._now(at)
            schedule = self.state.schedules.get(reviewer_id)
            if schedule is None or change_id not in schedule.active_assignments:
                raise NotAssigned(change_id)
            self._commit(
                ASSIGNMENT_RELEASED,
                {"change_id": change_id, "reviewer_id": reviewer_id},
                at,
            )

    def record_heartbeat(
        self,
        session_id: str,
        delta_seconds: float,
        at: datetime | None = None,
    ) -> tuple[ActivityTimer, list[HaltReminder]]:
        with self._lock:
            at = self._now(at)
            self.get_session(session_id)
            if delta_seconds < 0:
                raise NegativeDelta()
            existing = self.state.timers.get(session_id)
            probe = (
                ActivityTimer.from_dict(existing.to_dict())
                if existing is not None
                else ActivityTimer(
                    session_id,
                    threshold=timedelta(
                        minutes=self.config.reminder_threshold_minutes
                    ),
                )
            )
            _, reminders = heartbeat(probe, at, timedelta(seconds=delta_seconds))
            self._commit(
                HEARTBEAT_RECORDED,
                {"session_id": session_id, "delta_seconds": delta_seconds},
                at,
            )
            for reminder in reminders:
                self._commit(REMINDER_SENT, {"reminder": reminder.to_dict()}, at)
            return self.state.timers[session_id], reminders
