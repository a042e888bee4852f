"""Tests for span matching, the four evaluation modes, macro averaging and Dice agreement."""

import pytest

from revmine.corpus import AnnotationSpan
from revmine.errors import ConfigError, DataError
from revmine.evaluation import (
    MODE_KEYS,
    EvalReport,
    MatchMode,
    UnitMode,
    dice_agreement,
    evaluate_all,
    evaluate_tokens,
    evaluate_types,
    keys_match,
    macro_average,
    prf,
    spans_match,
    stem,
    type_key,
)


def span(start, end, review="r1", sentence=0, annotator="x"):
    return AnnotationSpan(annotator, review, sentence, start, end)


# "I failed to upload video to my board" -> to=2 upload=3 video=4 to=5
GOLD = span(2, 5)


class TestSpansMatch:
    @pytest.mark.parametrize("pred, partial", [
        (span(3, 5), True),    # upload video
        (span(4, 5), False),   # video
        (span(1, 6), False),   # failed to upload video to
        (span(2, 5), True),    # identical
        (span(3, 6), False),   # upload video to: shifted by one word
    ])
    def test_partial(self, pred, partial):
        assert spans_match(pred, GOLD, MatchMode.PARTIAL) is partial

    def test_exact(self):
        assert spans_match(span(2, 5), GOLD, "exact")
        assert not spans_match(span(3, 5), GOLD, "exact")

    def test_different_sentence(self):
        assert not spans_match(span(2, 5, sentence=1), GOLD, "partial")


class TestTokens:
    def test_identity(self):
        spans = [span(0, 1), span(2, 4), span(1, 2, review="r2")]
        for match in MatchMode:
            report = evaluate_tokens(spans, spans, match)
            assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_worked_example(self):
        exact = evaluate_tokens([span(3, 5)], [GOLD], "exact")
        assert (exact.tp, exact.fp, exact.fn) == (0, 1, 1)
        partial = evaluate_tokens([span(3, 5)], [GOLD], "partial")
        assert (partial.tp, partial.fp, partial.fn) == (1, 0, 0)

    def test_one_to_one(self):
        report = evaluate_tokens([span(2, 4), span(3, 5)], [GOLD], "partial")
        assert (report.tp, report.fp, report.fn) == (1, 1, 0)

    def test_empty(self):
        report = evaluate_tokens([], [], "exact")
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)

    def test_per_category(self):
        categories = {"r1": "social", "r2": "travel"}
        pred = [span(0, 1), span(0, 1, review="r2")]
        gold = [span(0, 1), span(1, 2, review="r2")]
        report = evaluate_tokens(pred, gold, "exact", categories)
        assert report.per_category["social"].f1 == 1.0
        assert report.per_category["travel"].f1 == 0.0
        assert report.macro.f1 == pytest.approx(0.5)
        assert report.f1 == pytest.approx(0.5)


class TestStemming:
    @pytest.mark.parametrize("word, expected", [("editing", "edit"), ("video", "video"), ("Videos", "video")])
    def test_english(self, word, expected):
        assert stem(word) == expected

    def test_identity_languages(self):
        assert stem("Läuft", "none") == "läuft"
        assert stem("Läuft", "german") == "läuft"

    def test_unsupported(self):
        with pytest.raises(ConfigError):
            stem("x", "klingon")

    def test_type_key(self):
        assert type_key(["upload", "videos"]) == "upload video"
        assert type_key("Video") == type_key(["videos"]) == "video"

    def test_keys_match(self):
        assert keys_match("upload video", "to upload video", "partial")
        assert not keys_match("video", "to upload video", "partial")
        assert not keys_match("upload video", "to upload video", "exact")


class TestTypes:
    def test_type_collapse(self, make_corpus):
        corpus = make_corpus([
            ("r1", "A", "c", 3, ["[video] and [video]", "[videos] please"]),
        ])
        gold = list(corpus.annotations)
        pred = [AnnotationSpan("m", "r1", 0, 0, 1)]
        report = evaluate_types(pred, gold, "exact", corpus)
        assert (report.tp, report.fp, report.fn) == (1, 0, 0)

    def test_partial_types(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["I failed [to upload videos]", "[upload video] fails"])])
        gold = [s for s in corpus.annotations if s.sentence_index == 0]
        pred = [s for s in corpus.annotations if s.sentence_index == 1]
        assert evaluate_types(pred, gold, "partial", corpus).tp == 1
        assert evaluate_types(pred, gold, "exact", corpus).tp == 0

    def test_disjoint(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["[video] and [sound]"])])
        a, b = corpus.annotations
        report = evaluate_types([a], [b], "partial", corpus)
        assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)

    def test_evaluate_all_properties(self, fixture_corpus):
        gold = fixture_corpus.spans_for("a1")
        pred = [AnnotationSpan("m", s.review_id, s.sentence_index, s.start, s.start + 1) for s in gold]
        reports = evaluate_all(pred, gold, fixture_corpus)
        assert list(reports) == list(MODE_KEYS)
        assert reports["partial_tokens"].tp >= reports["exact_tokens"].tp
        assert reports["partial_types"].tp >= reports["exact_types"].tp
        for report in reports.values():
            assert report.tp <= min(report.tp + report.fp, report.tp + report.fn)
        assert reports["exact_types"].tp + reports["exact_types"].fn <= len(gold)
        assert sorted(reports["exact_tokens"].per_category) == ["productivity", "social", "travel"]


class TestAggregation:
    def test_prf(self):
        assert prf(1, 1, 3) == pytest.approx((0.5, 0.25, 1 / 3))
        assert prf(0, 0, 0) == (0.0, 0.0, 0.0)

    def test_macro_two(self):
        reports = [EvalReport(MatchMode.EXACT, UnitMode.TOKEN, f1=0.2), EvalReport(MatchMode.EXACT, UnitMode.TOKEN, f1=0.4)]
        assert macro_average(reports).f1 == pytest.approx(0.3)

    def test_macro_one(self):
        report = EvalReport.from_counts("exact", "token", 3, 1, 2)
        averaged = macro_average({"c": report})
        assert (averaged.precision, averaged.recall, averaged.f1) == (report.precision, report.recall, report.f1)

    def test_published_average(self):
        values = [46.0, 26.5, 53.5, 26.5, 43.6, 37.5]
        reports = [EvalReport(MatchMode.EXACT, UnitMode.TOKEN, precision=v / 100) for v in values]
        assert round(100 * macro_average(reports).precision, 1) == 38.9

    def test_macro_empty(self):
        with pytest.raises(DataError):
            macro_average([])

    def test_report_to_dict(self):
        report = evaluate_tokens([span(0, 1)], [span(0, 1)], "exact", {"r1": "social"})
        payload = report.to_dict()
        assert payload["mode"] == "exact_tokens"
        assert payload["per_category"]["social"]["f1"] == 1.0
        assert payload["macro"]["f1"] == 1.0


class TestDice:
    def test_identical(self):
        spans = [span(0, 1), span(2, 3)]
        assert dice_agreement(spans, spans) == 1.0

    def test_disjoint(self):
        a = [span(i, i + 1) for i in range(3)]
        b = [span(i, i + 1, review="r2") for i in range(5)]
        assert dice_agreement(a, b) == 0.0

    def test_formula(self):
        a = [span(i, i + 1, annotator="a") for i in range(4)]
        b = [span(i, i + 1, annotator="b") for i in (0, 1, 10, 11, 12, 13)]
        assert dice_agreement(a, b) == pytest.approx(0.4)
        assert dice_agreement(b, a) == pytest.approx(0.4)

    def test_both_empty(self):
        assert dice_agreement([], []) == 1.0
