"""User Experience Questionnaire analytics.

Turns 1–7 item answers into the −3..+3 range, aggregates them into the
six named UEQ scales with 95% confidence intervals, and (when benchmark
cut points are supplied) classifies each scale mean into one of five
categories from excellent down to bad.

The interval uses the normal approximation (z = 1.96) rather than a
t-distribution; the choice is isolated in :func:`confidence_interval`
so it can be swapped without touching callers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import ReviewKitError

SCALES = (
    "Attractiveness",
    "Perspicuity",
    "Efficiency",
    "Dependability",
    "Stimulation",
    "Novelty",
)

CATEGORIES = ("excellent", "good", "above_average", "below_average", "bad")

Z_95 = 1.96
ANSWER_MIN = 1
ANSWER_MAX = 7
NEUTRAL_ANSWER = 4


class OutOfRange(ReviewKitError):
    def __init__(self, answer):
        self.answer = answer
        super().__init__(
            f"answer {answer!r} is outside the 1..7 response range"
        )


class EmptyResponses(ReviewKitError):
    def __init__(self):
        super().__init__("at least one response is required")


class MapMismatch(ReviewKitError):
    def __init__(self, participant_id: str, expected: int, got: int):
        self.participant_id = participant_id
        super().__init__(
            f"participant {participant_id!r} supplied {got} answers, "
            f"item map defines {expected}"
        )


class BadThresholds(ReviewKitError):
    def __init__(self, scale: str, reason: str):
        self.scale = scale
        super().__init__(f"thresholds for {scale}: {reason}")


@dataclass(frozen=True)
class UEQItem:
    item_index: int
    scale: str
    polarity: int
    left: str = ""
    right: str = ""

    def __post_init__(self):
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")
        if self.item_index < 1:
            raise ValueError("item_index must be 1-based")

    def to_dict(self) -> dict:
        return {
            "item_index": self.item_index,
            "scale": self.scale,
            "polarity": self.polarity,
            "left": self.left,
            "right": self.right,
        }


@dataclass(frozen=True)
class UEQItemMap:
    items: tuple[UEQItem, ...]

    def __post_init__(self):
        indexes = [item.item_index for item in self.items]
        if not indexes:
            raise ValueError("item map must define at least one item")
        if sorted(indexes) != list(range(1, len(indexes) + 1)):
            raise ValueError("item indexes must be contiguous from 1")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def scales(self) -> tuple[str, ...]:
        present = {item.scale for item in self.items}
        return tuple(s for s in SCALES if s in present)

    def scale_items(self, scale: str) -> tuple[UEQItem, ...]:
        return tuple(item for item in self.items if item.scale == scale)

    def to_dict(self) -> dict:
        return {"items": [item.to_dict() for item in self.items]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "UEQItemMap":
        items = tuple(
            sorted(
                (
                    UEQItem(
                        item_index=raw["item_index"],
                        scale=raw["scale"],
                        polarity=raw["polarity"],
                        left=raw.get("left", ""),
                        right=raw.get("right", ""),
                    )
                    for raw in data["items"]
                ),
                key=lambda item: item.item_index,
            )
        )
        return cls(items=items)


@dataclass(frozen=True)
class UEQResponse:
    participant_id: str
    answers: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "answers": list(self.answers),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "UEQResponse":
        return cls(
            participant_id=str(data["participant_id"]),
            answers=tuple(int(a) for a in data["answers"]),
        )


@dataclass(frozen=True)
class ScaleResult:
    scale: str
    mean: float
    ci_low: float
    ci_high: float
    n: int
    category: str | None = None

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "mean": self.mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n": self.n,
            "category": self.category,
        }


def transform(answer: int, polarity: int) -> int:
    """Map a 1..7 answer onto −3..+3 honoring item polarity."""
    if not isinstance(answer, int) or isinstance(answer, bool):
        raise OutOfRange(answer)
    if not ANSWER_MIN <= answer <= ANSWER_MAX:
        raise OutOfRange(answer)
    if polarity not in (1, -1):
        raise ValueError("polarity must be +1 or -1")
    return (answer - NEUTRAL_ANSWER) * polarity


def participant_scale_value(
    response: UEQResponse, item_map: UEQItemMap, scale: str
) -> float:
    """One participant's mean transformed value on one scale."""
    values = [
        transform(response.answers[item.item_index - 1], item.polarity)
        for item in item_map.scale_items(scale)
    ]
    return sum(values) / len(values)


def confidence_interval(mean: float, stdev: float, n: int) -> tuple[float, float]:
    """95% normal-approximation interval; collapses when it cannot spread."""
    if n <= 1 or stdev == 0.0:
        return (mean, mean)
    half_width = Z_95 * stdev / math.sqrt(n)
    return (mean - half_width, mean + half_width)


def scale_scores(
    responses: Sequence[UEQResponse], item_map: UEQItemMap
) -> list[ScaleResult]:
    """Per-scale mean and 95% CI over participants."""
    if not responses:
        raise EmptyResponses()
    expected = len(item_map)
    for response in responses:
        if len(response.answers) != expected:
            raise MapMismatch(
                response.participant_id, expected, len(response.answers)
            )
    results = []
    for scale in item_map.scales:
        values = [
            participant_scale_value(response, item_map, scale)
            for response in responses
        ]
        mean = statistics.fmean(values)
        stdev = statistics.stdev(values) if len(values) >= 2 else 0.0
        ci_low, ci_high = confidence_interval(mean, stdev, len(values))
        results.append(
            ScaleResult(
                scale=scale,
                mean=mean,
                ci_low=ci_low,
                ci_high=ci_high,
                n=len(values),
            )
        )
    return results


def validate_thresholds(scale: str, cuts: Sequence[float]) -> tuple[float, ...]:
    if len(cuts) != 4:
        raise BadThresholds(scale, f"expected 4 cut points, got {len(cuts)}")
    ordered = tuple(float(c) for c in cuts)
    if any(a >= b for a, b in zip(ordered, ordered[1:])):
        raise BadThresholds(scale, "cut points must be strictly increasing")
    return ordered


def classify(result: ScaleResult, cuts: Sequence[float]) -> str:
    """Place a scale mean into one of five benchmark categories.

    ``cuts`` are four ascending boundaries; a mean exactly on a boundary
    takes the better (higher) category.
    """
    ordered = validate_thresholds(result.scale, cuts)
    mean = result.mean
    if mean >= ordered[3]:
        return "excellent"
    if mean >= ordered[2]:
        return "good"
    if mean >= ordered[1]:
        return "above_average"
    if mean >= ordered[0]:
        return "below_average"
    return "bad"


def classified_scores(
    responses: Sequence[UEQResponse],
    item_map: UEQItemMap,
    thresholds: Mapping[str, Sequence[float]] | None = None,
) -> list[ScaleResult]:
    """Scores plus categories when thresholds are supplied.

    Classification is optional: scales without cut points keep a null
    category.
    """
    results = scale_scores(responses, item_map)
    if not thresholds:
        return results
    enriched = []
    for result in results:
        cuts = thresholds.get(result.scale)
        if cuts is None:
            enriched.append(result)
        else:
            enriched.append(
                ScaleResult(
                    scale=result.scale,
                    mean=result.mean,
                    ci_low=result.ci_low,
                    ci_high=result.ci_high,
                    n=result.n,
                    category=classify(result, cuts),
                )
            )
    return enriched


def analyze_groups(
    groups: Mapping[str, Sequence[UEQResponse]],
    item_map: UEQItemMap,
    thresholds: Mapping[str, Sequence[float]] | None = None,
) -> dict[str, list[ScaleResult]]:
    """Score each named group (e.g. one per review technique)."""
    if not groups:
        raise EmptyResponses()
    return {
        name: classified_scores(responses, item_map, thresholds)
        for name, responses in groups.items()
    }


def responses_from_json(data) -> list[UEQResponse]:
    return [UEQResponse.from_dict(item) for item in data]


def responses_from_csv(text: str) -> list[UEQResponse]:
    """Parse ``participant_id, a1..aN`` rows; a header row is optional."""
    reader = csv.reader(io.StringIO(text))
    responses = []
    for row in reader:
        cells = [cell.strip() for cell in row]
        if not cells or not any(cells):
            continue
        if cells[0].lower() == "participant_id":
            continue
        responses.append(
            UEQResponse(
                participant_id=cells[0],
                answers=tuple(int(cell) for cell in cells[1:]),
            )
        )
    return responses


def format_table(results_by_group: Mapping[str, Sequence[ScaleResult]]) -> str:
    """Plain-text summary: one block per group, means with 95% CIs."""
    lines = []
    for group, results in results_by_group.items():
        lines.append(group)
        lines.append("-" * len(group))
        header = f"{'Scale':<16}{'Mean':>8}{'95% CI':>20}{'n':>5}  Category"
        lines.append(header)
        for result in results:
            interval = f"[{result.ci_low:+.3f}, {result.ci_high:+.3f}]"
            category = result.category or "-"
            lines.append(
                f"{result.scale:<16}{result.mean:>+8.3f}{interval:>20}"
                f"{result.n:>5}  {category}"
            )
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def load_item_map(path: str | None = None) -> UEQItemMap:
    """Load an item map from ``path`` or fall back to the packaged one."""
    if path is None:
        raw = (
            resources.files("reviewkit.data")
            .joinpath("ueq_item_map.json")
            .read_text(encoding="utf-8")
        )
    else:
        with open(path, "r", encoding="utf-8") as handle:
            raw = handle.read()
    return UEQItemMap.from_dict(json.loads(raw))


def thresholds_from_json(data: Mapping) -> dict[str, tuple[float, ...]]:
    return {
        scale: validate_thresholds(scale, cuts) for scale, cuts in data.items()
    }
