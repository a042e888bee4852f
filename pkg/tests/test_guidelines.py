"""Tests for guideline simulation steps, the pipeline and the length cut-off sweep."""

import math
import random

import pytest

from revmine.corpus import AnnotationSpan, Corpus, Review, Sentence, dumps_jsonl, load_corpus
from revmine.errors import ConfigError, DataError
from revmine.experiments import ExperimentConfig
from revmine.guidelines import (
    STEP_ORDER,
    PipelineConfig,
    Step,
    cap_feature_length,
    length_cutoff_sweep,
    parse_cutoffs,
    parse_steps,
    preprocess,
    remove_nounless,
    remove_self_references,
    run_pipeline,
    self_reference_lexicon,
)
from revmine.tagger import TrainConfig
from tests.conftest import FIXTURES


def span_texts(corpus):
    return sorted(corpus.span_text(s) for s in corpus.annotations)


def check_report_arithmetic(report):
    assert report.spans_removed == report.stats_before.feature_tokens - report.stats_after.feature_tokens
    assert report.reviews_removed == report.stats_before.n_reviews - report.stats_after.n_reviews


class TestSteps:
    def test_preprocess_drops_span_free_reviews(self, make_corpus):
        corpus = make_corpus([
            ("r1", "A", "c", 3, ["[video/NN] ok/JJ"]),
            ("r2", "A", "c", 3, ["fine/JJ"]),
            ("r3", "A", "c", 3, ["[sound/NN]"]),
        ])
        result, report = preprocess(corpus)
        assert [r.id for r in result.reviews] == ["r1", "r3"]
        assert report.reviews_removed == 1
        assert report.spans_removed == 0
        check_report_arithmetic(report)

    def test_preprocess_identity(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["[video/NN]"])])
        result, report = preprocess(corpus)
        assert result == corpus
        assert report.reviews_removed == 0

    def test_preprocess_all_span_free(self, make_corpus):
        result, _ = preprocess(make_corpus([("r1", "A", "c", 3, ["fine/JJ"])]))
        assert len(result) == 0

    def test_self_references(self, make_corpus):
        corpus = make_corpus([
            ("r1", "Pinterest", "social", 3, ["the/DT [app/NN] is/VBZ ok/JJ", "[pinterest/NNP] rocks/VBZ"]),
            ("r2", "Pinterest", "social", 3, ["[app/NN store/NN sync/NN] fails/VBZ", "[Pinterest/NNP]"]),
        ])
        result, report = remove_self_references(corpus)
        assert span_texts(result) == ["app store sync"]
        assert report.spans_removed == 3
        assert {e.reason for e in report.removed_examples} == {
            "self-reference 'app'", "own app name 'pinterest'",
        }
        check_report_arithmetic(report)

    def test_other_apps_name_is_a_self_reference_too(self, make_corpus):
        corpus = make_corpus([
            ("r1", "Pinterest", "social", 3, ["[Flickr/NNP] is/VBZ better/JJR"]),
            ("r2", "Flickr", "social", 3, ["[photos/NNS]"]),
        ])
        result, _ = remove_self_references(corpus)
        assert span_texts(result) == ["photos"]

    def test_custom_lexicon(self, make_corpus):
        corpus = make_corpus([("r1", "Maps", "travel", 3, ["[software/NN]", "[app/NN]"])])
        result, _ = remove_self_references(corpus, lexicon=["Software"])
        assert span_texts(result) == ["app"]

    def test_empty_lexicon(self, make_corpus):
        with pytest.raises(ConfigError):
            self_reference_lexicon(make_corpus([("r1", "A", "c", 3, ["x"])]), lexicon=[])

    def test_default_lexicon_includes_app_names(self, fixture_corpus):
        words = self_reference_lexicon(fixture_corpus)
        assert {"app", "apps", "application", "applications", "pinterest", "tripadvisor", "evernote"} <= words

    def test_nounless(self, make_corpus):
        corpus = make_corpus([
            ("r1", "A", "c", 3, ["I/PRP want/VBP [to/TO upload/VB] ./."]),
            ("r2", "A", "c", 3, ["[to/TO upload/VB video/NN] please/UH"]),
            ("r3", "A", "c", 3, ["the/DT [video/NN]"]),
        ])
        result, report = remove_nounless(corpus)
        assert span_texts(result) == ["to upload video", "video"]
        assert report.reviews_removed == 1
        assert report.removed_examples[0].reason == "no noun (TO VB)"

    def test_nounless_needs_pos(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["[to upload] now"])])
        with pytest.raises(DataError, match="no POS tag"):
            remove_nounless(corpus)

    def test_nounless_ignores_untagged_tokens_outside_spans(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["I want [video/NN]"])])
        result, report = remove_nounless(corpus)
        assert report.spans_removed == 0

    def test_length_cap(self, make_corpus):
        corpus = make_corpus([
            ("r1", "A", "c", 3, ["[sorting/NN functionality/NN in/IN board/NN section/NN]"]),
            ("r2", "A", "c", 3, ["[to/TO upload/VB video/NN] and/CC [sound/NN]"]),
        ])
        result, report = cap_feature_length(corpus, 3)
        assert span_texts(result) == ["sound", "to upload video"]
        assert report.reviews_removed == 1

    def test_length_cap_one_keeps_single_words(self, fixture_corpus):
        result, _ = cap_feature_length(fixture_corpus, 1)
        assert all(s.length == 1 for s in result.annotations)
        assert span_texts(result) == ["app", "pinterest"]

    @pytest.mark.parametrize("cutoff", [None, math.inf])
    def test_no_cap(self, fixture_corpus, cutoff):
        result, report = cap_feature_length(fixture_corpus, cutoff, drop_empty=False)
        assert result == fixture_corpus
        assert report.spans_removed == 0

    def test_length_cap_below_one(self, fixture_corpus):
        with pytest.raises(ConfigError):
            cap_feature_length(fixture_corpus, 0)

    def test_keep_empty_reviews(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["[a/DT b/DT c/DT d/NN]"])])
        result, report = cap_feature_length(corpus, 3, drop_empty=False)
        assert len(result) == 1
        assert report.reviews_removed == 0

    def test_steps_only_touch_the_active_annotator(self, fixture_corpus):
        extra = AnnotationSpan("a2", "p2", 1, 1, 2)
        corpus = fixture_corpus.with_annotations(fixture_corpus.annotations + (extra,))
        result, _ = remove_self_references(corpus, annotator="a1")
        assert extra in result.annotations

    @pytest.mark.parametrize("step", [preprocess, remove_self_references, remove_nounless, cap_feature_length])
    def test_idempotent_and_removal_only(self, fixture_corpus, step):
        once, _ = step(fixture_corpus)
        twice, report = step(once)
        assert twice == once
        assert report.spans_removed == 0
        assert set(once.annotations) <= set(fixture_corpus.annotations)


WORDS = [("app", "NN"), ("video", "NN"), ("upload", "VB"), ("to", "TO"), ("fast", "JJ"),
         ("playlist", "NN"), ("the", "DT"), ("share", "VB"), ("photos", "NNS"), ("Pinterest", "NNP")]


def random_corpus(rng):
    reviews, spans = [], []
    for r in range(rng.randint(1, 4)):
        review_id = f"r{r}"
        sentences = []
        for s in range(rng.randint(1, 2)):
            words = [rng.choice(WORDS) for _ in range(rng.randint(1, 8))]
            sentences.append(Sentence.from_words([w for w, _ in words], [t for _, t in words], s))
            i = 0
            while i < len(words):
                if rng.random() < 0.4:
                    end = min(len(words), i + rng.randint(1, 5))
                    spans.append(AnnotationSpan("a1", review_id, s, i, end))
                    i = end
                i += 1
        reviews.append(Review(review_id, rng.choice(["Pinterest", "Trello"]), rng.choice(["social", "work"]),
                              rng.randint(1, 5), tuple(sentences)))
    return Corpus(tuple(reviews), tuple(spans), frozenset({"a1"}))


def test_steps_on_random_corpora():
    rng = random.Random(7)
    steps = [preprocess, remove_self_references, remove_nounless, lambda c: cap_feature_length(c, 2)]
    for _ in range(1000):
        corpus = random_corpus(rng)
        for step in steps:
            once, report = step(corpus)
            check_report_arithmetic(report)
            assert set(once.annotations) <= set(corpus.annotations)
            assert {r.id for r in once.reviews} <= {r.id for r in corpus.reviews}
            assert report.stats_after.feature_tokens <= report.stats_before.feature_tokens
            twice, again = step(once)
            assert twice == once
            assert again.spans_removed == 0


class TestPipeline:
    def test_full_pipeline_matches_golden_output(self, fixture_corpus):
        result, reports = run_pipeline(fixture_corpus, PipelineConfig())
        golden = FIXTURES / "reviews_simulated.jsonl"
        assert dumps_jsonl(result) == golden.read_text(encoding="utf-8")
        assert [r.step_name for r in reports] == ["preprocess", "self_refs", "nounless", "length_cap"]
        assert [(r.spans_removed, r.reviews_removed) for r in reports] == [(0, 1), (2, 0), (1, 1), (1, 1)]

    def test_reports_chain(self, fixture_corpus):
        _, reports = run_pipeline(fixture_corpus)
        for report in reports:
            check_report_arithmetic(report)
        for a, b in zip(reports, reports[1:]):
            assert a.stats_after == b.stats_before

    def test_empty_step_list_is_identity(self, fixture_corpus):
        result, reports = run_pipeline(fixture_corpus, PipelineConfig(steps=()))
        assert result == fixture_corpus
        assert reports == []

    def test_rerun_removes_nothing(self, fixture_corpus):
        once, _ = run_pipeline(fixture_corpus)
        twice, reports = run_pipeline(once)
        assert twice == once
        assert all(r.spans_removed == 0 and r.reviews_removed == 0 for r in reports)

    def test_order_is_enforced(self):
        with pytest.raises(ConfigError, match="must follow"):
            PipelineConfig(steps=("length_cap", "nounless"))
        config = PipelineConfig(steps=("length_cap", "nounless"), enforce_order=False)
        assert config.steps == (Step.LENGTH_CAP, Step.NOUNLESS)

    def test_parse_steps(self):
        assert parse_steps("pre,self,noun,len") == STEP_ORDER
        assert parse_steps("") == ()
        with pytest.raises(ConfigError):
            parse_steps("pre,sim4")

    def test_max_len_config(self):
        with pytest.raises(ConfigError):
            PipelineConfig(max_len=0)

    def test_config_lexicon_is_lowercased(self):
        config = PipelineConfig(self_ref_lexicon={"Program"})
        assert config.self_ref_lexicon == {"program"}
        assert config.to_dict()["self_ref_lexicon"] == ["program"]


class TestSweep:
    def test_parse_cutoffs(self):
        assert parse_cutoffs("1,2,3,4,inf") == [1, 2, 3, 4, None]
        with pytest.raises(ConfigError):
            parse_cutoffs("1,x")

    def test_single_corpus_sweep(self, feature_corpus):
        config = ExperimentConfig(train=TrainConfig(l2_lambda=0.1, max_iterations=30))
        table = length_cutoff_sweep(feature_corpus, [1, None], config)
        assert table.datasets == ["dataset"]
        assert table.cutoffs == ["1", "inf"]
        assert len(table.rows) == 8
        for row in table.rows:
            assert row.min_f1 == row.avg_f1 == row.max_f1
        assert table.row("exact_tokens", 1).avg_f1 == table.row("exact_tokens", None).avg_f1
        assert table.to_csv().splitlines()[0] == "mode,cutoff,min_f1,avg_f1,max_f1"

    def test_several_corpora(self, feature_corpus):
        config = ExperimentConfig(train=TrainConfig(l2_lambda=0.1, max_iterations=30))
        table = length_cutoff_sweep({"x": feature_corpus, "y": feature_corpus}, [None], config)
        row = table.row("partial_types", None)
        assert set(row.per_dataset) == {"x", "y"}
        assert row.per_dataset["x"] == row.per_dataset["y"] == row.avg_f1


def test_golden_fixture_loads(fixture_corpus):
    golden = load_corpus(FIXTURES / "reviews_simulated.jsonl")
    assert [r.id for r in golden.reviews] == ["p1", "p2", "t1", "e2"]
