"""Questionnaire analytics tests.

The scoring oracle below recomputes every statistic with bare loops and
explicit formulas (no statistics module), the way one would check the
numbers in a spreadsheet, and the production path must match it.
"""

import math
import random
import statistics

import pytest

from reviewkit.ueq import (
    BadThresholds,
    EmptyResponses,
    MapMismatch,
    OutOfRange,
    ScaleResult,
    UEQItem,
    UEQItemMap,
    UEQResponse,
    analyze_groups,
    classified_scores,
    classify,
    format_table,
    load_item_map,
    responses_from_csv,
    responses_from_json,
    scale_scores,
    thresholds_from_json,
    transform,
)

# Five synthetic participants over the packaged 26-item map. Frozen;
# participant p4 answers the neutral midpoint everywhere.
FIVE_PARTICIPANTS = [
    ("p1", [7, 6, 2, 3, 2, 5, 6, 5, 3, 2, 6, 2, 6, 5, 6, 6, 2, 3, 2, 6, 2, 5, 3, 2, 2, 5]),
    ("p2", [5, 5, 3, 4, 3, 4, 5, 4, 4, 3, 5, 3, 5, 4, 5, 5, 3, 4, 3, 5, 3, 4, 4, 3, 3, 4]),
    ("p3", [6, 7, 1, 2, 1, 6, 7, 6, 2, 1, 7, 1, 7, 6, 7, 7, 1, 2, 1, 7, 1, 6, 2, 1, 1, 6]),
    ("p4", [4] * 26),
    ("p5", [3, 2, 6, 5, 6, 2, 3, 2, 6, 6, 2, 6, 3, 2, 2, 2, 6, 5, 6, 3, 6, 2, 5, 6, 6, 2]),
]


def fixture_responses():
    return [UEQResponse(pid, tuple(answers)) for pid, answers in FIVE_PARTICIPANTS]


def oracle_scale_stats(responses, item_map):
    """Loops-only recomputation: per-scale mean, sample stdev, CI."""
    out = {}
    for scale in item_map.scales:
        items = [item for item in item_map.items if item.scale == scale]
        per_participant = []
        for response in responses:
            total = 0.0
            for item in items:
                answer = response.answers[item.item_index - 1]
                total += (answer - 4) * item.polarity
            per_participant.append(total / len(items))
        n = len(per_participant)
        mean = sum(per_participant) / n
        if n >= 2:
            sq = sum((v - mean) ** 2 for v in per_participant)
            s = math.sqrt(sq / (n - 1))
        else:
            s = 0.0
        if n <= 1 or s == 0.0:
            ci = (mean, mean)
        else:
            half = 1.96 * s / math.sqrt(n)
            ci = (mean - half, mean + half)
        out[scale] = (mean, s, ci, n)
    return out


class TestTransform:
    def test_midpoint(self):
        assert transform(4, 1) == 0
        assert transform(4, -1) == 0

    def test_endpoints(self):
        assert transform(7, 1) == 3
        assert transform(7, -1) == -3
        assert transform(1, 1) == -3
        assert transform(1, -1) == 3

    def test_bijection_per_polarity(self):
        for polarity in (1, -1):
            image = {transform(a, polarity) for a in range(1, 8)}
            assert image == {-3, -2, -1, 0, 1, 2, 3}

    def test_odd_around_midpoint(self):
        for polarity in (1, -1):
            for d in range(0, 4):
                assert transform(4 + d, polarity) == -transform(4 - d, polarity)

    def test_out_of_range(self):
        for bad in (0, 8, -1, 100):
            with pytest.raises(OutOfRange):
                transform(bad, 1)
        with pytest.raises(OutOfRange):
            transform(3.5, 1)

    def test_bad_polarity(self):
        with pytest.raises(ValueError):
            transform(4, 0)


class TestItemMap:
    def test_packaged_map_shape(self):
        item_map = load_item_map()
        assert len(item_map) == 26
        counts = {scale: len(item_map.scale_items(scale)) for scale in item_map.scales}
        assert counts == {
            "Attractiveness": 6,
            "Perspicuity": 4,
            "Efficiency": 4,
            "Dependability": 4,
            "Stimulation": 4,
            "Novelty": 4,
        }
        assert sorted(i.item_index for i in item_map.items) == list(range(1, 27))

    def test_rejects_unknown_scale(self):
        with pytest.raises(ValueError):
            UEQItem(1, "Speed", 1)

    def test_rejects_gap_in_indexes(self):
        with pytest.raises(ValueError):
            UEQItemMap(
                (UEQItem(1, "Novelty", 1), UEQItem(3, "Novelty", -1))
            )

    def test_round_trip(self):
        item_map = load_item_map()
        assert UEQItemMap.from_dict(item_map.to_dict()) == item_map


class TestScaleScores:
    def test_all_neutral_is_all_zero(self):
        item_map = load_item_map()
        responses = [
            UEQResponse(f"p{i}", tuple([4] * 26)) for i in range(4)
        ]
        for result in scale_scores(responses, item_map):
            assert result.mean == 0.0
            assert result.ci_low == 0.0
            assert result.ci_high == 0.0
            assert result.n == 4

    def test_identical_responses_collapse_ci(self):
        item_map = load_item_map()
        answers = tuple(FIVE_PARTICIPANTS[0][1])
        responses = [UEQResponse(f"p{i}", answers) for i in range(5)]
        for result in scale_scores(responses, item_map):
            assert result.ci_low == result.mean == result.ci_high

    def test_single_participant_collapses_ci(self):
        item_map = load_item_map()
        results = scale_scores(fixture_responses()[:1], item_map)
        for result in results:
            assert result.ci_low == result.mean == result.ci_high
            assert result.n == 1

    def test_five_participant_fixture_matches_oracle(self):
        item_map = load_item_map()
        results = scale_scores(fixture_responses(), item_map)
        oracle = oracle_scale_stats(fixture_responses(), item_map)
        assert [r.scale for r in results] == list(item_map.scales)
        for result in results:
            mean, _, (low, high), n = oracle[result.scale]
            assert result.mean == pytest.approx(mean, abs=1e-9)
            assert result.ci_low == pytest.approx(low, abs=1e-9)
            assert result.ci_high == pytest.approx(high, abs=1e-9)
            assert result.n == n == 5

    def test_fixture_attractiveness_mean_hand_value(self):
        # Hand-worked: per-participant values 2, 5/6, 8/3, 0, -11/6 give
        # a group mean of 22/30 = 11/15.
        item_map = load_item_map()
        results = {r.scale: r for r in scale_scores(fixture_responses(), item_map)}
        assert results["Attractiveness"].mean == pytest.approx(11 / 15, abs=1e-12)

    def test_participant_order_does_not_matter(self):
        item_map = load_item_map()
        ordered = scale_scores(fixture_responses(), item_map)
        shuffled = list(fixture_responses())
        random.Random(5).shuffle(shuffled)
        reordered = scale_scores(shuffled, item_map)
        for a, b in zip(ordered, reordered):
            assert a.mean == pytest.approx(b.mean, abs=1e-12)
            assert a.ci_low == pytest.approx(b.ci_low, abs=1e-12)

    def test_ci_width_identity_on_random_groups(self):
        item_map = load_item_map()
        rng = random.Random(31)
        for _ in range(25):
            n = rng.randrange(2, 9)
            responses = [
                UEQResponse(
                    f"p{i}",
                    tuple(rng.randrange(1, 8) for _ in range(26)),
                )
                for i in range(n)
            ]
            for result in scale_scores(responses, item_map):
                values = [
                    sum(
                        (response.answers[item.item_index - 1] - 4) * item.polarity
                        for item in item_map.scale_items(result.scale)
                    )
                    / len(item_map.scale_items(result.scale))
                    for response in responses
                ]
                s = statistics.stdev(values)
                want_width = 2 * 1.96 * s / math.sqrt(n) if s else 0.0
                got_width = result.ci_high - result.ci_low
                assert got_width == pytest.approx(want_width, abs=1e-12)
                assert result.ci_low <= result.mean <= result.ci_high
                assert -3.0 <= result.mean <= 3.0

    def test_empty_responses(self):
        with pytest.raises(EmptyResponses):
            scale_scores([], load_item_map())

    def test_map_mismatch(self):
        item_map = load_item_map()
        with pytest.raises(MapMismatch):
            scale_scores([UEQResponse("p1", (4, 4, 4))], item_map)

    def test_out_of_range_answer_rejected(self):
        item_map = load_item_map()
        answers = [4] * 26
        answers[10] = 9
        with pytest.raises(OutOfRange):
            scale_scores([UEQResponse("p1", tuple(answers))], item_map)


class TestClassify:
    CUTS = [-1.0, 0.0, 1.0, 1.75]

    def result(self, mean):
        return ScaleResult("Novelty", mean, mean, mean, 5)

    def test_above_top_cut(self):
        assert classify(self.result(2.5), self.CUTS) == "excellent"

    def test_below_bottom_cut(self):
        assert classify(self.result(-2.0), self.CUTS) == "bad"

    def test_boundaries_round_up(self):
        assert classify(self.result(1.75), self.CUTS) == "excellent"
        assert classify(self.result(1.0), self.CUTS) == "good"
        assert classify(self.result(0.0), self.CUTS) == "above_average"
        assert classify(self.result(-1.0), self.CUTS) == "below_average"

    def test_interiors(self):
        assert classify(self.result(1.2), self.CUTS) == "good"
        assert classify(self.result(0.4), self.CUTS) == "above_average"
        assert classify(self.result(-0.5), self.CUTS) == "below_average"

    def test_bad_thresholds(self):
        with pytest.raises(BadThresholds):
            classify(self.result(0.0), [0.0, 1.0, 2.0])
        with pytest.raises(BadThresholds):
            classify(self.result(0.0), [0.0, 1.0, 1.0, 2.0])
        with pytest.raises(BadThresholds):
            classify(self.result(0.0), [2.0, 1.0, 0.0, -1.0])

    def test_classification_optional_without_thresholds(self):
        item_map = load_item_map()
        results = classified_scores(fixture_responses(), item_map)
        assert all(r.category is None for r in results)

    def test_classification_applied_per_scale(self):
        item_map = load_item_map()
        thresholds = {scale: self.CUTS for scale in item_map.scales}
        results = classified_scores(fixture_responses(), item_map, thresholds)
        assert all(r.category in
                   {"excellent", "good", "above_average", "below_average", "bad"}
                   for r in results)
        partial = classified_scores(
            fixture_responses(), item_map, {"Novelty": self.CUTS}
        )
        by_scale = {r.scale: r for r in partial}
        assert by_scale["Novelty"].category is not None
        assert by_scale["Attractiveness"].category is None


class TestLoadersAndOutput:
    def test_groups_analysis(self):
        item_map = load_item_map()
        groups = {
            "traditional": fixture_responses()[:2],
            "assisted": fixture_responses()[2:],
        }
        out = analyze_groups(groups, item_map)
        assert set(out) == {"traditional", "assisted"}
        assert all(len(results) == 6 for results in out.values())
        with pytest.raises(EmptyResponses):
            analyze_groups({}, item_map)

    def test_csv_with_and_without_header(self):
        body = "\n".join(
            f"{pid}," + ",".join(str(a) for a in answers)
            for pid, answers in FIVE_PARTICIPANTS
        )
        with_header = "participant_id," + ",".join(
            f"a{i}" for i in range(1, 27)
        ) + "\n" + body
        for text in (body, with_header):
            responses = responses_from_csv(text)
            assert [r.participant_id for r in responses] == [
                "p1", "p2", "p3", "p4", "p5"
            ]
            assert responses[0].answers == tuple(FIVE_PARTICIPANTS[0][1])

    def test_json_loader(self):
        data = [
            {"participant_id": pid, "answers": answers}
            for pid, answers in FIVE_PARTICIPANTS
        ]
        responses = responses_from_json(data)
        assert responses == fixture_responses()

    def test_thresholds_loader_validates(self):
        loaded = thresholds_from_json({"Novelty": [-1, 0, 1, 2]})
        assert loaded["Novelty"] == (-1.0, 0.0, 1.0, 2.0)
        with pytest.raises(BadThresholds):
            thresholds_from_json({"Novelty": [1, 1, 2, 3]})

    def test_table_output(self):
        item_map = load_item_map()
        out = analyze_groups({"assisted": fixture_responses()}, item_map)
        table = format_table(out)
        assert "assisted" in table
        for scale in item_map.scales:
            assert scale in table
        assert "95% CI" in table
        assert table.endswith("\n")

    def test_result_serialization(self):
        result = ScaleResult("Novelty", 0.5, 0.25, 0.75, 5, "good")
        data = result.to_dict()
        assert data["scale"] == "Novelty"
        assert data["category"] == "good"
