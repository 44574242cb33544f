"""Tests for comment scaffolding, advice, linting, and snippet search."""

import json
import random
import re
from pathlib import Path

import pytest

from reviewkit.changes import ChangeRequest
from reviewkit.comments import (
    CHECKLIST,
    CONTEXT_COMPOSING,
    CONTEXT_REVIEWING_FEEDBACK,
    HEADER_PROBLEM,
    HEADER_RATIONALE,
    HEADER_SUGGESTIONS,
    INCITE,
    AdviceItem,
    DanglingSnippet,
    EmptyCatalog,
    EmptyQuery,
    SnippetRef,
    StructuredComment,
    UnknownContext,
    advice_list,
    attach_snippet,
    compose_raw,
    default_advice_catalog,
    default_destructive_patterns,
    lint_comment,
    parse_sections,
    scaffold_comment,
    search_snippets,
    snippet_lines,
    tokenize,
)
from reviewkit.diffs import ADD, CONTEXT, DEL, MODIFIED, FileDiff, Hunk

FIXTURES = Path(__file__).parent / "fixtures"

LINT_CORPUS = json.loads((FIXTURES / "lint_corpus.json").read_text())


def make_change_from_hunk_texts(per_file: dict[str, list[list[str]]]) -> ChangeRequest:
    """Build a change where each hunk is given as a list of line texts."""
    files = []
    for path, hunk_texts in per_file.items():
        hunks = []
        position = 1
        for texts in hunk_texts:
            lines = [(CONTEXT, t) for t in texts]
            hunks.append(Hunk(position, len(lines), position, len(lines), lines))
            position += len(lines) + 2
        files.append(
            FileDiff(old_path=path, new_path=path, kind=MODIFIED, hunks=hunks)
        )
    change = ChangeRequest(
        id="c1", repo_id="r", author_id="alice", title="t", files=files
    )
    change.validate()
    return change


class TestScaffold:
    def test_contains_all_three_headers(self):
        text = scaffold_comment()
        assert HEADER_PROBLEM in text
        assert HEADER_RATIONALE in text
        assert HEADER_SUGGESTIONS in text

    def test_has_three_numbered_slots(self):
        text = scaffold_comment()
        slots = [l for l in text.splitlines() if re.match(r"^\d+\.", l)]
        assert [s[0] for s in slots] == ["1", "2", "3"]

    def test_empty_scaffold_lints_to_three_errors(self):
        report = lint_comment(scaffold_comment())
        assert sorted(f.rule_id for f in report.findings) == ["L1", "L2", "L3"]
        assert not report.passed

    def test_filled_scaffold_passes(self):
        text = scaffold_comment()
        text = text.replace(f"{HEADER_PROBLEM}:", f"{HEADER_PROBLEM}: a problem")
        text = text.replace(f"{HEADER_RATIONALE}:", f"{HEADER_RATIONALE}: it hurts")
        text = text.replace("1.", "1. do this")
        report = lint_comment(text)
        assert report.passed


class TestParseSections:
    def test_content_on_header_line(self):
        parsed = parse_sections("Identified problem: the loop is quadratic")
        assert parsed.problem == "the loop is quadratic"
        assert parsed.headers_found == ("problem",)

    def test_enumeration_markers_stripped(self):
        parsed = parse_sections(
            "Suggestions:\n1. first\n2) second\n- third\n* fourth"
        )
        assert parsed.suggestions == ("first", "second", "third", "fourth")

    def test_text_before_any_header_ignored(self):
        parsed = parse_sections("hello there\nIdentified problem: x")
        assert parsed.problem == "x"

    def test_compose_then_parse_round_trip(self):
        raw = compose_raw("p text", "r text", ["s one", "s two", "s three"])
        parsed = parse_sections(raw)
        assert parsed.problem == "p text"
        assert parsed.rationale == "r text"
        assert parsed.suggestions == ("s one", "s two", "s three")


class TestAdvice:
    def test_default_catalog_has_checklist_before_incite(self):
        catalog = default_advice_catalog()
        assert len(catalog) >= 5
        ordered = advice_list(CONTEXT_COMPOSING, catalog)
        kinds = [item.kind for item in ordered]
        assert CHECKLIST in kinds and INCITE in kinds
        first_incite = kinds.index(INCITE)
        assert all(k == INCITE for k in kinds[first_incite:])

    def test_single_incite_catalog(self):
        item = AdviceItem(id="x", text="Ask what could break.", kind=INCITE,
                          source="local")
        ordered = advice_list(CONTEXT_REVIEWING_FEEDBACK, [item])
        assert ordered == [item]
        assert ordered[-1].kind == INCITE

    def test_empty_catalog_rejected(self):
        with pytest.raises(EmptyCatalog):
            advice_list(CONTEXT_COMPOSING, [])

    def test_unknown_context_rejected(self):
        with pytest.raises(UnknownContext):
            advice_list("editing", default_advice_catalog())

    def test_stable_partition(self):
        catalog = default_advice_catalog()
        ordered = advice_list(CONTEXT_COMPOSING, catalog)
        checklist_in = [i.id for i in catalog if i.kind == CHECKLIST]
        checklist_out = [i.id for i in ordered if i.kind == CHECKLIST]
        assert checklist_in == checklist_out

    def test_advice_length_cap(self):
        with pytest.raises(ValueError):
            AdviceItem(id="x", text="y" * 121, kind=CHECKLIST, source="s").validate()


class TestLintCorpus:
    @pytest.mark.parametrize(
        "entry", LINT_CORPUS, ids=[e["name"] for e in LINT_CORPUS]
    )
    def test_hand_labeled_expectations(self, entry):
        report = lint_comment(entry["text"])
        got = sorted(f.rule_id for f in report.findings)
        assert got == sorted(entry["expected"]), entry["name"]

    def test_passed_iff_no_errors(self):
        for entry in LINT_CORPUS:
            report = lint_comment(entry["text"])
            has_errors = any(f.severity == "error" for f in report.findings)
            assert report.passed == (not has_errors)

    def test_deterministic(self):
        for entry in LINT_CORPUS[:5]:
            first = lint_comment(entry["text"]).to_dict()
            for _ in range(20):
                assert lint_comment(entry["text"]).to_dict() == first

    def test_w1_message_mentions_brainstorming(self):
        report = lint_comment(
            "Identified problem: x\nWhy is it a problem: y\nSuggestions:\n1. z"
        )
        w1 = [f for f in report.findings if f.rule_id == "W1"]
        assert len(w1) == 1
        assert "encourage brainstorming" in w1[0].message

    def test_d1_span_points_at_match(self):
        text = "Identified problem: you always break the build."
        report = lint_comment(text)
        d1 = [f for f in report.findings if f.rule_id == "D1"]
        assert len(d1) == 1
        start, end = d1[0].span
        assert text[start:end].lower() == "you always"

    def test_structured_fields_take_precedence(self):
        comment = StructuredComment(
            id="m1", change_id="c1", author_id="bob",
            problem="p", rationale="r",
            suggestions=["a", "b", "c"], raw_text="free-form text",
        )
        report = lint_comment(comment.raw_text, structured=comment)
        assert report.passed


class TestSnippetSearch:
    def test_absent_token_yields_empty(self):
        change = make_change_from_hunk_texts({"a.py": [["alpha beta"]]})
        assert search_snippets("zulu", change, 5) == []

    def test_term_frequency_ranks_double_hit_first(self):
        change = make_change_from_hunk_texts(
            {"a.py": [["foo bar", "foo again"], ["one foo here"]]}
        )
        results = search_snippets("foo", change, 5)
        assert [r.hunk_index for r in results] == [0, 1]
        assert results[0].score == 2.0
        assert results[1].score == 1.0

    def test_tie_breaks_by_path(self):
        change = make_change_from_hunk_texts(
            {"b.py": [["needle x"]], "a.py": [["needle y"]]}
        )
        results = search_snippets("needle", change, 5)
        assert [r.file_path for r in results] == ["a.py", "b.py"]

    def test_k_caps_results(self):
        change = make_change_from_hunk_texts(
            {"a.py": [["needle"], ["needle"], ["needle"]]}
        )
        assert len(search_snippets("needle", change, 2)) == 2

    def test_empty_query_rejected(self):
        change = make_change_from_hunk_texts({"a.py": [["x"]]})
        with pytest.raises(EmptyQuery):
            search_snippets("   !!!", change, 3)

    def test_multi_token_query_sums_frequencies(self):
        change = make_change_from_hunk_texts(
            {"a.py": [["alpha beta alpha"], ["beta beta beta"]]}
        )
        results = search_snippets("alpha beta", change, 5)
        # hunk 0: alpha×2 + beta×1 = 3; hunk 1: beta×3 = 3; tie → position.
        assert [r.score for r in results] == [3.0, 3.0]
        assert [r.hunk_index for r in results] == [0, 1]

    def test_duplicate_query_tokens_count_once(self):
        change = make_change_from_hunk_texts({"a.py": [["word word"]]})
        results = search_snippets("word word word", change, 5)
        assert results[0].score == 2.0


def brute_force_search(query: str, change: ChangeRequest, k: int):
    """Independent scorer following the stated contract directly."""
    terms = set(re.findall(r"[a-z0-9]+", query.lower()))
    rows = []
    for file in change.files:
        path = file.new_path if file.new_path is not None else file.old_path
        for idx, hunk in enumerate(file.hunks):
            score = 0
            for _, text in hunk.lines:
                for token in re.findall(r"[a-z0-9]+", text.lower()):
                    if token in terms:
                        score += 1
            if score > 0:
                start = hunk.old_start if file.kind == "deleted" else hunk.new_start
                rows.append((score, path, start, idx))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    return [(path, idx, float(score)) for score, path, start, idx in rows[:k]]


class TestSearchOracle:
    def test_matches_brute_force_on_random_changes(self):
        rng = random.Random(99)
        vocab = ["alpha", "beta", "gamma", "delta", "loop", "cache", "index",
                 "retry", "flag", "mutex"]
        for _ in range(100):
            per_file = {}
            for f in range(rng.randint(1, 4)):
                hunks = []
                for _ in range(rng.randint(1, 5)):
                    lines = [
                        " ".join(rng.choices(vocab, k=rng.randint(1, 6)))
                        for _ in range(rng.randint(1, 4))
                    ]
                    hunks.append(lines)
                per_file[f"src/f{f}.py"] = hunks
            change = make_change_from_hunk_texts(per_file)
            assert sum(len(f.hunks) for f in change.files) <= 20
            query = " ".join(rng.choices(vocab, k=rng.randint(1, 3)))
            k = rng.randint(1, 8)
            expected = brute_force_search(query, change, k)
            got = [
                (r.file_path, r.hunk_index, r.score)
                for r in search_snippets(query, change, k)
            ]
            assert got == expected


class TestAttachSnippet:
    def change_and_comment(self):
        change = make_change_from_hunk_texts({"a.py": [["line one", "line two"]]})
        comment = StructuredComment(
            id="m1", change_id="c1", author_id="bob",
            problem="p", rationale="r", suggestions=["s"],
            raw_text=compose_raw("p", "r", ["s"]),
        )
        return change, comment

    def test_attach_quotes_lines(self):
        change, comment = self.change_and_comment()
        ref = SnippetRef(file_path="a.py", hunk_index=0, start_line=0,
                         end_line=1, score=1.0)
        attach_snippet(comment, ref, change)
        assert len(comment.snippets) == 1
        assert "```" in comment.raw_text
        assert " line one" in comment.raw_text
        assert " line two" in comment.raw_text

    def test_attach_same_snippet_twice_stores_once(self):
        change, comment = self.change_and_comment()
        ref = SnippetRef("a.py", 0, 0, 1, 1.0)
        attach_snippet(comment, ref, change)
        before = comment.raw_text
        attach_snippet(comment, ref, change)
        assert len(comment.snippets) == 1
        assert comment.raw_text == before

    def test_snippet_from_other_change_rejected(self):
        change, comment = self.change_and_comment()
        comment.change_id = "other"
        with pytest.raises(DanglingSnippet):
            attach_snippet(comment, SnippetRef("a.py", 0, 0, 0, 1.0), change)

    def test_out_of_range_snippet_rejected(self):
        change, comment = self.change_and_comment()
        with pytest.raises(DanglingSnippet):
            attach_snippet(comment, SnippetRef("a.py", 0, 0, 9, 1.0), change)
        with pytest.raises(DanglingSnippet):
            attach_snippet(comment, SnippetRef("a.py", 3, 0, 0, 1.0), change)

    def test_snippet_lines_render_prefixes(self):
        change = ChangeRequest(
            id="c1", repo_id="r", author_id="a", title="t",
            files=[FileDiff(
                old_path="x.py", new_path="x.py", kind=MODIFIED,
                hunks=[Hunk(1, 2, 1, 2, [
                    (CONTEXT, "keep"), (DEL, "gone"), (ADD, "fresh"),
                ])],
            )],
        )
        ref = SnippetRef("x.py", 0, 0, 2, 1.0)
        assert snippet_lines(change, ref) == [" keep", "-gone", "+fresh"]


class TestTokenize:
    def test_lowercase_alphanumeric_runs(self):
        assert tokenize("Foo_bar-Baz 42x") == ["foo", "bar", "baz", "42x"]

    def test_default_patterns_compile(self):
        patterns = default_destructive_patterns()
        assert len(patterns) >= 3
