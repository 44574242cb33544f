"""Registry of the bias scenarios this tool is built to counter.

Each scenario names an environmental trigger, the bias it sets off, the
effect on review quality, and the features shipped here as remedies.
Mutation events carry a scenario id so audits can trace which scenario a
given feature use belongs to.
"""

from __future__ import annotations

from dataclasses import dataclass

# Bias kinds.
CONFIRMATION_BIAS = "confirmation_bias"
DECISION_FATIGUE = "decision_fatigue"

# Scenario ids.
LOW_QUALITY_FEEDBACK = "low_quality_feedback"
TIME_PRESSURE = "time_pressure"
OVER_SOLICITATION = "over_solicitation"
MISSING_TOPIC_KNOWLEDGE = "missing_topic_knowledge"
LOW_ENERGY_HOURS = "low_energy_hours"
REVIEW_INEXPERIENCE = "review_inexperience"

# Feature ids implemented across the package.
F_ADVICE_CATALOG = "advice_catalog"
F_EXPERT_FEEDBACK = "expert_feedback"
F_SUGGESTION_SLOTS = "suggestion_slots"
F_REVIEW_CAPS = "review_caps"
F_HALT_REMINDERS = "halt_reminders"
F_EXPERT_RANKING = "expert_ranking"
F_GUIDE = "guide"
F_FATIGUE_WINDOWS = "fatigue_windows"
F_COMMENT_SCAFFOLD = "comment_scaffold"
F_COMMENT_LINT = "comment_lint"
F_SNIPPET_SEARCH = "snippet_search"


@dataclass(frozen=True)
class ScenarioTag:
    id: str
    trigger: str
    bias: str
    effect: str
    remedies: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "trigger": self.trigger,
            "bias": self.bias,
            "effect": self.effect,
            "remedies": list(self.remedies),
        }


_REGISTRY = (
    ScenarioTag(
        id=LOW_QUALITY_FEEDBACK,
        trigger="An author receives sloppy or hurtful feedback on their change.",
        bias=CONFIRMATION_BIAS,
        effect="The author brushes off the recommendations to keep their "
        "self-image intact.",
        remedies=(F_ADVICE_CATALOG, F_EXPERT_FEEDBACK),
    ),
    ScenarioTag(
        id=TIME_PRESSURE,
        trigger="The reviewer works under a deadline and wants the review done "
        "fast.",
        bias=CONFIRMATION_BIAS,
        effect="The reviewer looks for reasons to wave the code through rather "
        "than probing it.",
        remedies=(F_SUGGESTION_SLOTS,),
    ),
    ScenarioTag(
        id=OVER_SOLICITATION,
        trigger="Too many review requests land on the same reviewer.",
        bias=DECISION_FATIGUE,
        effect="Reviews feel like a chore and get pushed off to later.",
        remedies=(F_REVIEW_CAPS, F_HALT_REMINDERS),
    ),
    ScenarioTag(
        id=MISSING_TOPIC_KNOWLEDGE,
        trigger="The change touches a topic the reviewer knows little about.",
        bias=DECISION_FATIGUE,
        effect="The reviewer stalls and keeps postponing the review.",
        remedies=(F_EXPERT_RANKING,),
    ),
    ScenarioTag(
        id=LOW_ENERGY_HOURS,
        trigger="The review happens at hours when attention runs low, such as "
        "right after lunch or late in the working day.",
        bias=DECISION_FATIGUE,
        effect="Comments turn impulsive instead of carefully argued.",
        remedies=(F_GUIDE, F_FATIGUE_WINDOWS),
    ),
    ScenarioTag(
        id=REVIEW_INEXPERIENCE,
        trigger="The reviewer has little practice doing code reviews.",
        bias=DECISION_FATIGUE,
        effect="Parts of the change get skipped and the code is only half "
        "understood.",
        remedies=(F_COMMENT_SCAFFOLD, F_COMMENT_LINT, F_SNIPPET_SEARCH),
    ),
)

SCENARIOS: dict[str, ScenarioTag] = {tag.id: tag for tag in _REGISTRY}

# Canonical remedy names from the scenario catalog, mapped to the feature
# implementing each one.
REMEDY_FEATURES: dict[str, str] = {
    "constructive_feedback": F_ADVICE_CATALOG,
    "review_feedback": F_EXPERT_FEEDBACK,
    "encourage_brainstorming": F_SUGGESTION_SLOTS,
    "scheduled_reviews": F_REVIEW_CAPS,
    "observe_needed_time": F_HALT_REMINDERS,
    "find_an_expert": F_EXPERT_RANKING,
    "guide_with_comments": F_GUIDE,
    "help_commenting": F_COMMENT_SCAFFOLD,
}

# feature id -> scenario id; built from the registry, one scenario each.
FEATURE_SCENARIOS: dict[str, str] = {}
for _tag in _REGISTRY:
    for _feature in _tag.remedies:
        if _feature in FEATURE_SCENARIOS:
            raise RuntimeError(f"feature {_feature!r} tagged by two scenarios")
        FEATURE_SCENARIOS[_feature] = _tag.id


def scenario_for_feature(feature_id: str) -> ScenarioTag:
    """Return the scenario a feature remedies. KeyError for unknown ids."""
    return SCENARIOS[FEATURE_SCENARIOS[feature_id]]


def all_scenarios() -> list[ScenarioTag]:
    return list(_REGISTRY)
