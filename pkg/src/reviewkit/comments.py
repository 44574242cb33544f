"""Structured review comments: scaffold, advice, lint, and snippet search.

A structured comment has three sections ("Identified problem", "Why is it
a problem", "Suggestions"). The scaffold hands the reviewer those headers
with three empty suggestion slots; the linter checks completeness and
flags wording that tends to land as destructive. Snippet search ranks the
change's hunks by query term frequency so reviewers can quote code
instead of gesturing at it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources

from .changes import ChangeRequest
from .diffs import DELETED, Hunk
from .errors import ReviewKitError
from .timeutil import format_utc, parse_utc

HEADER_PROBLEM = "Identified problem"
HEADER_RATIONALE = "Why is it a problem"
HEADER_SUGGESTIONS = "Suggestions"

# Advice kinds.
CHECKLIST = "checklist"
INCITE = "incite"
ADVICE_KINDS = (CHECKLIST, INCITE)

# Editor contexts advice can be requested for.
CONTEXT_COMPOSING = "composing"
CONTEXT_REVIEWING_FEEDBACK = "reviewing_feedback"
ADVICE_CONTEXTS = (CONTEXT_COMPOSING, CONTEXT_REVIEWING_FEEDBACK)

MAX_ADVICE_LEN = 120

# Lint rules.
RULE_MISSING_PROBLEM = "L1"
RULE_MISSING_RATIONALE = "L2"
RULE_NO_SUGGESTIONS = "L3"
RULE_FEW_SUGGESTIONS = "W1"
RULE_DESTRUCTIVE_WORDING = "D1"

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"

_RE_PROBLEM = re.compile(r"^\s*identified problem\s*:?\s*(.*)$", re.IGNORECASE)
_RE_RATIONALE = re.compile(r"^\s*why is it a problem\s*\??\s*:?\s*(.*)$", re.IGNORECASE)
_RE_SUGGESTIONS = re.compile(r"^\s*suggestions\s*:?\s*(.*)$", re.IGNORECASE)
_RE_ENUM_MARK = re.compile(r"^\s*(?:\d+[.)]\s*|[-*]\s+)")

_WORD = re.compile(r"[a-z0-9]+")


class EmptyCatalog(ReviewKitError):
    def __init__(self):
        super().__init__("the advice catalog is empty")


class UnknownContext(ReviewKitError):
    def __init__(self, context: str):
        self.context = context
        super().__init__(f"unknown advice context {context!r}")


class EmptyQuery(ReviewKitError):
    def __init__(self):
        super().__init__("snippet query has no searchable tokens")


class DanglingSnippet(ReviewKitError):
    def __init__(self, reason: str):
        super().__init__(f"snippet does not fit the change: {reason}")


@dataclass(frozen=True)
class AdviceItem:
    """One short piece of guidance shown next to the comment editor."""

    id: str
    text: str
    kind: str
    source: str

    def validate(self) -> None:
        if self.kind not in ADVICE_KINDS:
            raise ValueError(f"unknown advice kind {self.kind!r}")
        if not self.text or len(self.text) > MAX_ADVICE_LEN:
            raise ValueError(
                f"advice text must be 1..{MAX_ADVICE_LEN} characters, "
                f"got {len(self.text)}"
            )

    def to_dict(self) -> dict:
        return {"id": self.id, "text": self.text, "kind": self.kind,
                "source": self.source}


@dataclass(frozen=True)
class LintFinding:
    rule_id: str
    severity: str
    message: str
    span: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "severity": self.severity,
            "message": self.message,
            "span": list(self.span) if self.span else None,
        }


@dataclass(frozen=True)
class LintReport:
    findings: tuple[LintFinding, ...]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "findings": [f.to_dict() for f in self.findings],
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LintReport":
        findings = tuple(
            LintFinding(
                rule_id=f["rule_id"],
                severity=f["severity"],
                message=f["message"],
                span=tuple(f["span"]) if f.get("span") else None,
            )
            for f in data.get("findings", [])
        )
        return cls(findings=findings, passed=data["passed"])


@dataclass(frozen=True)
class SnippetRef:
    """A quotable slice of one hunk.

    ``start_line`` and ``end_line`` are 0-based inclusive offsets into the
    hunk's line list.
    """

    file_path: str
    hunk_index: int
    start_line: int
    end_line: int
    score: float

    def to_dict(self) -> dict:
        return {
            "file_path": self.file_path,
            "hunk_index": self.hunk_index,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SnippetRef":
        return cls(
            file_path=data["file_path"],
            hunk_index=data["hunk_index"],
            start_line=data["start_line"],
            end_line=data["end_line"],
            score=data["score"],
        )


@dataclass
class StructuredComment:
    """A review comment broken into the three named sections."""

    id: str
    change_id: str
    author_id: str
    problem: str
    rationale: str
    suggestions: list[str]
    file_path: str | None = None
    line: int | None = None
    snippets: list[SnippetRef] = field(default_factory=list)
    raw_text: str = ""
    created_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "change_id": self.change_id,
            "author_id": self.author_id,
            "problem": self.problem,
            "rationale": self.rationale,
            "suggestions": list(self.suggestions),
            "file_path": self.file_path,
            "line": self.line,
            "snippets": [s.to_dict() for s in self.snippets],
            "raw_text": self.raw_text,
            "created_at": format_utc(self.created_at) if self.created_at else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StructuredComment":
        created = data.get("created_at")
        return cls(
            id=data["id"],
            change_id=data["change_id"],
            author_id=data["author_id"],
            problem=data.get("problem", ""),
            rationale=data.get("rationale", ""),
            suggestions=list(data.get("suggestions", [])),
            file_path=data.get("file_path"),
            line=data.get("line"),
            snippets=[SnippetRef.from_dict(s) for s in data.get("snippets", [])],
            raw_text=data.get("raw_text", ""),
            created_at=parse_utc(created) if created else None,
        )


def scaffold_comment() -> str:
    """The empty three-section template with three suggestion slots."""
    return (
        f"{HEADER_PROBLEM}:\n"
        "\n"
        f"{HEADER_RATIONALE}:\n"
        "\n"
        f"{HEADER_SUGGESTIONS}:\n"
        "1.\n"
        "2.\n"
        "3.\n"
    )


def compose_raw(problem: str, rationale: str, suggestions: list[str]) -> str:
    """Render section fields back into the canonical raw text."""
    lines = [f"{HEADER_PROBLEM}: {problem}".rstrip()]
    lines.append(f"{HEADER_RATIONALE}: {rationale}".rstrip())
    lines.append(f"{HEADER_SUGGESTIONS}:")
    for i, suggestion in enumerate(suggestions, start=1):
        lines.append(f"{i}. {suggestion}".rstrip())
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ParsedSections:
    problem: str
    rationale: str
    suggestions: tuple[str, ...]
    headers_found: tuple[str, ...]


def parse_sections(raw_text: str) -> ParsedSections:
    """Split hand-typed or scaffolded text into the three sections.

    Headers are matched line-initially, case-insensitively, with an
    optional colon; text on the header line itself counts as content.
    Suggestion lines lose their leading enumeration markers.
    """
    section: str | None = None
    found: list[str] = []
    problem_lines: list[str] = []
    rationale_lines: list[str] = []
    suggestion_lines: list[str] = []
    buckets = {
        "problem": problem_lines,
        "rationale": rationale_lines,
        "suggestions": suggestion_lines,
    }
    for line in raw_text.splitlines():
        matched = False
        # Rationale first: "why is it a problem" must not be swallowed by
        # a later, looser match.
        for name, pattern in (
            ("rationale", _RE_RATIONALE),
            ("problem", _RE_PROBLEM),
            ("suggestions", _RE_SUGGESTIONS),
        ):
            match = pattern.match(line)
            if match:
                section = name
                if name not in found:
                    found.append(name)
                remainder = match.group(1).strip()
                if remainder:
                    buckets[name].append(remainder)
                matched = True
                break
        if matched or section is None:
            continue
        buckets[section].append(line)
    suggestions = []
    for line in suggestion_lines:
        cleaned = _RE_ENUM_MARK.sub("", line).strip()
        if cleaned:
            suggestions.append(cleaned)
    return ParsedSections(
        problem="\n".join(problem_lines).strip(),
        rationale="\n".join(rationale_lines).strip(),
        suggestions=tuple(suggestions),
        headers_found=tuple(found),
    )


def load_advice_items(raw: list[dict]) -> list[AdviceItem]:
    items = []
    for entry in raw:
        item = AdviceItem(
            id=str(entry["id"]),
            text=str(entry["text"]),
            kind=str(entry["kind"]),
            source=str(entry.get("source", "")),
        )
        item.validate()
        items.append(item)
    return items


def default_advice_catalog() -> list[AdviceItem]:
    raw = json.loads(
        resources.files("reviewkit.data").joinpath("advice_catalog.json").read_text()
    )
    return load_advice_items(raw)


def advice_list(context: str, catalog: list[AdviceItem]) -> list[AdviceItem]:
    """Catalog in display order: checklist items first, then incite items.

    The order within each kind follows the catalog file (stable
    partition). Both contexts currently see the same items; the context
    argument exists so future catalogs can differ per situation.
    """
    if context not in ADVICE_CONTEXTS:
        raise UnknownContext(context)
    if not catalog:
        raise EmptyCatalog()
    checklist = [item for item in catalog if item.kind == CHECKLIST]
    incite = [item for item in catalog if item.kind == INCITE]
    return checklist + incite


def load_destructive_patterns(raw: list[str]) -> list[re.Pattern]:
    return [re.compile(p) for p in raw]


def default_destructive_patterns() -> list[re.Pattern]:
    raw = json.loads(
        resources.files("reviewkit.data")
        .joinpath("destructive_patterns.json")
        .read_text()
    )
    return load_destructive_patterns(raw)


def lint_comment(
    raw_text: str,
    structured: StructuredComment | None = None,
    patterns: list[re.Pattern] | None = None,
) -> LintReport:
    """Check a comment for completeness and destructive wording.

    Never raises on text content; missing sections come back as error
    findings, wording issues as warnings. Callers decide what to do with
    the report; nothing here blocks anything.
    """
    if structured is not None:
        problem = structured.problem.strip()
        rationale = structured.rationale.strip()
        suggestions = [s for s in structured.suggestions if s.strip()]
    else:
        sections = parse_sections(raw_text)
        problem = sections.problem
        rationale = sections.rationale
        suggestions = list(sections.suggestions)

    findings: list[LintFinding] = []
    if not problem:
        findings.append(LintFinding(
            RULE_MISSING_PROBLEM, SEVERITY_ERROR,
            "No identified problem: say what is wrong.",
        ))
    if not rationale:
        findings.append(LintFinding(
            RULE_MISSING_RATIONALE, SEVERITY_ERROR,
            "No rationale: say why it is a problem.",
        ))
    if not suggestions:
        findings.append(LintFinding(
            RULE_NO_SUGGESTIONS, SEVERITY_ERROR,
            "No suggestions: offer at least one way forward.",
        ))
    elif len(suggestions) < 3:
        findings.append(LintFinding(
            RULE_FEW_SUGGESTIONS, SEVERITY_WARNING,
            f"Only {len(suggestions)} suggestion(s); aiming for three "
            "alternatives helps encourage brainstorming.",
        ))

    if patterns is None:
        patterns = default_destructive_patterns()
    for pattern in patterns:
        for match in pattern.finditer(raw_text):
            findings.append(LintFinding(
                RULE_DESTRUCTIVE_WORDING, SEVERITY_WARNING,
                f"Wording {match.group(0)!r} may land as destructive; "
                "see the constructive-feedback advice list.",
                span=match.span(),
            ))

    passed = not any(f.severity == SEVERITY_ERROR for f in findings)
    return LintReport(findings=tuple(findings), passed=passed)


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def _hunk_start(file_kind: str, hunk: Hunk) -> int:
    return hunk.old_start if file_kind == DELETED else hunk.new_start


def search_snippets(query: str, change: ChangeRequest, k: int) -> list[SnippetRef]:
    """Rank the change's hunks by query term frequency.

    Score = for each unique query token, its occurrence count across the
    hunk's line texts, summed. Zero-score hunks are dropped; ties break
    by path, then hunk position.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    terms = set(tokenize(query))
    if not terms:
        raise EmptyQuery()
    scored: list[tuple[float, str, int, int, Hunk]] = []
    for file in change.files:
        path = file.display_path
        for hunk_index, hunk in enumerate(file.hunks):
            counts = 0
            for _, text in hunk.lines:
                tokens = tokenize(text)
                counts += sum(1 for token in tokens if token in terms)
            if counts > 0:
                start = _hunk_start(file.kind, hunk)
                scored.append((float(counts), path, start, hunk_index, hunk))
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))
    results = []
    for score, path, _, hunk_index, hunk in scored[:k]:
        results.append(SnippetRef(
            file_path=path,
            hunk_index=hunk_index,
            start_line=0,
            end_line=max(len(hunk.lines) - 1, 0),
            score=score,
        ))
    return results


def snippet_lines(change: ChangeRequest, ref: SnippetRef) -> list[str]:
    """The referenced lines, rendered with their diff prefixes."""
    prefix = {"context": " ", "add": "+", "del": "-"}
    for file in change.files:
        if file.display_path != ref.file_path:
            continue
        if ref.hunk_index >= len(file.hunks):
            break
        hunk = file.hunks[ref.hunk_index]
        if not hunk.lines:
            break
        if ref.start_line < 0 or ref.end_line >= len(hunk.lines):
            break
        if ref.start_line > ref.end_line:
            break
        return [
            prefix[tag] + text
            for tag, text in hunk.lines[ref.start_line : ref.end_line + 1]
        ]
    raise DanglingSnippet(
        f"({ref.file_path!r}, hunk {ref.hunk_index}, "
        f"lines {ref.start_line}..{ref.end_line})"
    )


def attach_snippet(
    comment: StructuredComment, snippet: SnippetRef, change: ChangeRequest
) -> StructuredComment:
    """Append a snippet and quote its lines in the raw text.

    Attaching the same reference twice stores and quotes it once. The
    snippet must belong to the comment's change.
    """
    if change.id != comment.change_id:
        raise DanglingSnippet("snippet change does not match comment change")
    lines = snippet_lines(change, snippet)  # validates the reference
    key = (snippet.file_path, snippet.hunk_index, snippet.start_line,
           snippet.end_line)
    for existing in comment.snippets:
        if (existing.file_path, existing.hunk_index, existing.start_line,
                existing.end_line) == key:
            return comment
    comment.snippets.append(snippet)
    quoted = "\n".join(lines)
    block = f"\n```\n{quoted}\n```\n"
    comment.raw_text = comment.raw_text.rstrip("\n") + "\n" + block.lstrip("\n")
    return comment
