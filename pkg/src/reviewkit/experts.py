"""Expertise mining and expert feedback requests.

A reviewer's expertise for a path is the sum, over their commits, of a
path-overlap factor times a recency decay. The overlap factor between a
target path and a commit is the best shared-leading-segment ratio against
any path the commit touched; the decay halves every ``half_life_days``.
Requests for expert feedback are rate-capped per expert so the feature
cannot become a way to pester the same person endlessly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterable

from .changes import ChangeRequest, CommitHistory
from .errors import ReviewKitError
from .timeutil import format_utc, parse_utc

DEFAULT_HALF_LIFE_DAYS = 90.0
DEFAULT_REQUEST_CAP = 3
DEFAULT_REQUEST_EXPIRY_DAYS = 14

# Request subjects and statuses.
SUBJECT_COMMENT = "comment"
SUBJECT_REVIEW = "review"
REQUEST_SUBJECTS = (SUBJECT_COMMENT, SUBJECT_REVIEW)

PENDING = "pending"
ANSWERED = "answered"
DECLINED = "declined"
EXPIRED = "expired"
REQUEST_STATUSES = (PENDING, ANSWERED, DECLINED, EXPIRED)


class NonPositiveHalfLife(ReviewKitError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"half life must be positive, got {value}")


class NoCandidates(ReviewKitError):
    http_status = 409

    def __init__(self):
        super().__init__("no candidate reviewers remain after exclusions")


class SelfRequest(ReviewKitError):
    def __init__(self):
        super().__init__("cannot request expert feedback from yourself")


class ExpertSaturated(ReviewKitError):
    http_status = 409

    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"expert already has {limit} open requests")


class UnknownSubject(ReviewKitError):
    http_status = 404

    def __init__(self, subject: str, subject_id: str):
        self.subject = subject
        self.subject_id = subject_id
        super().__init__(f"unknown subject {subject!r} {subject_id!r}")


class UnknownRequest(ReviewKitError):
    http_status = 404

    def __init__(self, request_id: str):
        self.request_id = request_id
        super().__init__(f"unknown expert request {request_id!r}")


def path_segments(path: str) -> list[str]:
    return [part for part in path.split("/") if part]


def shared_prefix_segments(a: list[str], b: list[str]) -> int:
    shared = 0
    for left, right in zip(a, b):
        if left != right:
            break
        shared += 1
    return shared


def prefix_match(path: str, touched: Iterable[str]) -> float:
    """Best leading-segment overlap ratio of ``path`` against ``touched``.

    An exact match scores 1.0; disjoint paths score 0.0. The ratio divides
    by the longer of the two paths so deep partial matches do not
    outweigh exact ones.
    """
    target = path_segments(path)
    best = 0.0
    for other in touched:
        candidate = path_segments(other)
        denominator = max(len(target), len(candidate))
        if denominator == 0:
            continue
        ratio = shared_prefix_segments(target, candidate) / denominator
        if ratio > best:
            best = ratio
    return best


def age_weight(timestamp: datetime, now: datetime, half_life_days: float) -> float:
    age_days = (now - timestamp).total_seconds() / 86400.0
    return 0.5 ** (age_days / half_life_days)


@dataclass
class ExpertiseProfile:
    reviewer_id: str
    path_scores: dict[str, float]
    computed_at: datetime
    half_life_days: float = DEFAULT_HALF_LIFE_DAYS

    def score_for(self, paths: Iterable[str]) -> float:
        return sum(self.path_scores.get(path, 0.0) for path in paths)

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "path_scores": dict(self.path_scores),
            "computed_at": format_utc(self.computed_at),
            "half_life_days": self.half_life_days,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExpertiseProfile":
        return cls(
            reviewer_id=data["reviewer_id"],
            path_scores={k: float(v) for k, v in data["path_scores"].items()},
            computed_at=parse_utc(data["computed_at"]),
            half_life_days=float(data.get("half_life_days", DEFAULT_HALF_LIFE_DAYS)),
        )


def build_profiles(
    history: CommitHistory,
    now: datetime,
    half_life_days: float = DEFAULT_HALF_LIFE_DAYS,
    paths: Iterable[str] | None = None,
) -> list[ExpertiseProfile]:
    """Score every author in the history against the requested paths.

    ``paths`` defaults to every path the history touches. Profiles come
    back sorted by reviewer id and are deterministic for a given
    (history, half life, now).
    """
    if not half_life_days > 0 or math.isnan(half_life_days):
        raise NonPositiveHalfLife(half_life_days)
    target_paths = sorted(set(paths)) if paths is not None else history.paths()
    profiles: list[ExpertiseProfile] = []
    for reviewer_id in history.authors():
        commits = [c for c in history if c.author_id == reviewer_id]
        path_scores: dict[str, float] = {}
        for path in target_paths:
            total = 0.0
            for commit in commits:
                overlap = prefix_match(path, commit.touched_paths)
                if overlap > 0.0:
                    total += overlap * age_weight(
                        commit.timestamp, now, half_life_days
                    )
            path_scores[path] = total
        profiles.append(
            ExpertiseProfile(
                reviewer_id=reviewer_id,
                path_scores=path_scores,
                computed_at=now,
                half_life_days=half_life_days,
            )
        )
    return profiles


def rank_reviewers(
    change: ChangeRequest,
    profiles: list[ExpertiseProfile],
    exclude: Iterable[str] = (),
    k: int = 5,
) -> list[tuple[str, float]]:
    """Rank profile holders by summed score over the change's files.

    The change author is always excluded. Ties break toward the smaller
    reviewer id.
    """
    excluded = set(exclude) | {change.author_id}
    change_paths = [file.display_path for file in change.files]
    rows = [
        (profile.reviewer_id, profile.score_for(change_paths))
        for profile in profiles
        if profile.reviewer_id not in excluded
    ]
    if not rows:
        raise NoCandidates()
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows[:k]


@dataclass
class ExpertRequest:
    id: str
    requester_id: str
    expert_id: str
    subject: str
    subject_id: str
    status: str = PENDING
    created_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "requester_id": self.requester_id,
            "expert_id": self.expert_id,
            "subject": self.subject,
            "subject_id": self.subject_id,
            "status": self.status,
            "created_at": format_utc(self.created_at) if self.created_at else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExpertRequest":
        created = data.get("created_at")
        return cls(
            id=data["id"],
            requester_id=data["requester_id"],
            expert_id=data["expert_id"],
            subject=data["subject"],
            subject_id=data["subject_id"],
            status=data.get("status", PENDING),
            created_at=parse_utc(created) if created else None,
        )


@dataclass
class RequestLedger:
    """Expert feedback requests with a per-expert open-request cap.

    Pending requests older than ``expiry_days`` lapse to expired before
    any cap check, so a silent expert does not block the budget forever.
    """

    cap: int = DEFAULT_REQUEST_CAP
    expiry_days: int = DEFAULT_REQUEST_EXPIRY_DAYS
    requests: list[ExpertRequest] = field(default_factory=list)

    def expire(self, now: datetime) -> list[ExpertRequest]:
        """Lapse overdue pending requests; returns the ones that expired."""
        cutoff = timedelta(days=self.expiry_days)
        lapsed = []
        for request in self.requests:
            if (
                request.status == PENDING
                and request.created_at is not None
                and now - request.created_at > cutoff
            ):
                request.status = EXPIRED
                lapsed.append(request)
        return lapsed

    def open_for(self, expert_id: str) -> list[ExpertRequest]:
        return [
            r
            for r in self.requests
            if r.expert_id == expert_id and r.status == PENDING
        ]

    def create(
        self,
        request_id: str,
        requester_id: str,
        expert_id: str,
        subject: str,
        subject_id: str,
        now: datetime,
        subject_exists: Callable[[str, str], bool] | None = None,
    ) -> ExpertRequest:
        if requester_id == expert_id:
            raise SelfRequest()
        if subject not in REQUEST_SUBJECTS:
            raise UnknownSubject(subject, subject_id)
        if subject_exists is not None and not subject_exists(subject, subject_id):
            raise UnknownSubject(subject, subject_id)
        self.expire(now)
        if len(self.open_for(expert_id)) >= self.cap:
            raise ExpertSaturated(self.cap)
        request = ExpertRequest(
            id=request_id,
            requester_id=requester_id,
            expert_id=expert_id,
            subject=subject,
            subject_id=subject_id,
            status=PENDING,
            created_at=now,
        )
        self.requests.append(request)
        return request

    def resolve(self, request_id: str, status: str) -> ExpertRequest:
        if status not in (ANSWERED, DECLINED):
            raise ValueError(f"cannot resolve to {status!r}")
        for request in self.requests:
            if request.id == request_id:
                request.status = status
                return request
        raise UnknownRequest(request_id)

    def to_dict(self) -> dict:
        return {
            "cap": self.cap,
            "expiry_days": self.expiry_days,
            "requests": [r.to_dict() for r in self.requests],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RequestLedger":
        return cls(
            cap=data.get("cap", DEFAULT_REQUEST_CAP),
            expiry_days=data.get("expiry_days", DEFAULT_REQUEST_EXPIRY_DAYS),
            requests=[ExpertRequest.from_dict(r) for r in data.get("requests", [])],
        )
