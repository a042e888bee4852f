"""Tests for fold construction, the validation procedures and report emission."""

import json

import pytest

from revmine.errors import ConfigError, DataError
from revmine.evaluation import MODE_KEYS
from revmine.experiments import (
    ExperimentConfig,
    Procedure,
    augment_training,
    cross_category_validation,
    emit_procedure_summary,
    emit_report,
    make_folds,
    per_category_cv,
    render_report,
    run_experiment,
    size_label,
    stratified_cv,
)
from revmine.synthetic import SyntheticConfig, generate_corpus, generate_external
from revmine.tagger import TrainConfig

FAST = TrainConfig(l2_lambda=0.1, max_iterations=20)


def check_partition(corpus, folds):
    all_ids = {r.id for r in corpus.reviews}
    for fold in folds:
        assert not set(fold.train_ids) & set(fold.test_ids)
    return all_ids


class TestFolds:
    def test_ccv_holds_out_each_category(self, feature_corpus):
        folds = make_folds(feature_corpus, ExperimentConfig(procedure="ccv"))
        assert [f.category for f in folds] == ["productivity", "social", "travel"]
        check_partition(feature_corpus, folds)
        assert folds[0].test_ids == ("e1", "e2")
        assert set(folds[0].train_ids) == {"s1", "s2", "t1", "t2"}

    def test_ccv_needs_two_categories(self, make_corpus):
        corpus = make_corpus([("r1", "A", "c", 3, ["[x/NN]"]), ("r2", "A", "c", 3, ["[y/NN]"])])
        with pytest.raises(DataError, match="categories"):
            make_folds(corpus, ExperimentConfig(procedure="ccv"))

    @pytest.mark.parametrize("procedure", ["scv", "appcat"])
    def test_k_larger_than_category(self, feature_corpus, procedure):
        with pytest.raises(DataError, match="fewer than k_folds"):
            make_folds(feature_corpus, ExperimentConfig(procedure=procedure, k_folds=3))

    def test_scv_test_sets_partition_the_corpus(self, feature_corpus):
        folds = make_folds(feature_corpus, ExperimentConfig(procedure="scv", k_folds=2))
        all_ids = check_partition(feature_corpus, folds)
        tested = [rid for f in folds for rid in f.test_ids]
        assert sorted(tested) == sorted(all_ids)
        for fold in folds:
            assert sorted(fold.train_ids + fold.test_ids) == sorted(all_ids)
            categories = {feature_corpus.review(rid).category for rid in fold.test_ids}
            assert categories == {"social", "travel", "productivity"}

    def test_appcat_stays_inside_a_category(self, feature_corpus):
        folds = make_folds(feature_corpus, ExperimentConfig(procedure="appcat", k_folds=2))
        assert len(folds) == 6
        check_partition(feature_corpus, folds)
        for fold in folds:
            ids = fold.train_ids + fold.test_ids
            assert {feature_corpus.review(rid).category for rid in ids} == {fold.category}
        for category in ("social", "travel", "productivity"):
            tested = [rid for f in folds if f.category == category for rid in f.test_ids]
            assert len(tested) == len(set(tested)) == 2

    def test_folds_depend_on_seed_only(self, feature_corpus):
        config = ExperimentConfig(procedure="scv", k_folds=2, seed=7)
        assert make_folds(feature_corpus, config) == make_folds(feature_corpus, config)


class TestConfig:
    def test_procedure_from_string(self):
        assert ExperimentConfig(procedure="scv").procedure is Procedure.SCV

    @pytest.mark.parametrize("kwargs", [
        {"procedure": "loocv"},
        {"k_folds": 1},
        {"jobs": 0},
        {"procedure": "ccv-ext"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kwargs)

    def test_hash_ignores_jobs(self):
        assert ExperimentConfig(jobs=1).config_hash() == ExperimentConfig(jobs=4).config_hash()
        assert ExperimentConfig(seed=1).config_hash() != ExperimentConfig(seed=2).config_hash()

    def test_size_label(self):
        assert size_label(10, 100) == "S"
        assert size_label(80, 100) == "M"
        assert size_label(150, 100) == "L"


class TestRunExperiment:
    def test_ccv_result(self, feature_corpus):
        result = run_experiment(feature_corpus, ExperimentConfig(procedure="ccv", train=FAST), progress=False)
        assert [f.category for f in result.folds] == ["productivity", "social", "travel"]
        assert sorted(result.per_category) == ["productivity", "social", "travel"]
        assert list(result.aggregate) == list(MODE_KEYS)
        assert result.size_label == "M"
        assert result.provenance["n_folds"] == 3
        assert result.provenance["annotator"] == "a1"
        for mode in MODE_KEYS:
            mean_f1 = sum(result.per_category[c][mode].f1 for c in result.per_category) / 3
            assert result.aggregate[mode].f1 == pytest.approx(mean_f1)
            assert result.aggregate["partial_tokens"].tp >= result.aggregate["exact_tokens"].tp

    def test_jobs_do_not_change_results(self, feature_corpus):
        one = run_experiment(feature_corpus, ExperimentConfig(procedure="scv", k_folds=2, train=FAST), False)
        many = run_experiment(feature_corpus, ExperimentConfig(procedure="scv", k_folds=2, train=FAST, jobs=3), False)
        assert one.to_dict() == many.to_dict()

    def test_convenience_wrapper(self, feature_corpus):
        result = cross_category_validation(feature_corpus, ExperimentConfig(procedure="scv", train=FAST))
        assert result.procedure is Procedure.CCV

    def test_unknown_annotator(self, feature_corpus):
        with pytest.raises(DataError):
            run_experiment(feature_corpus, ExperimentConfig(annotator="zz", train=FAST), progress=False)


class TestExternal:
    def test_augmentation_appends_external_sentences(self, feature_corpus):
        external = generate_external("laptop", 10, seed=1)
        pairs = augment_training(feature_corpus, [external], "a1")
        assert len(pairs) == feature_corpus.n_sentences + 10

    def test_language_mismatch(self, feature_corpus):
        external = generate_external("laptop", 5, language="german")
        with pytest.raises(DataError, match="language"):
            augment_training(feature_corpus, [external])
        config = ExperimentConfig(procedure="ccv-ext", external_corpora=(external,), train=FAST)
        with pytest.raises(DataError, match="language"):
            run_experiment(feature_corpus, config, progress=False)

    def test_ccv_ext_grows_training_folds(self, feature_corpus):
        external = generate_external("restaurant", 10, seed=2)
        plain = run_experiment(feature_corpus, ExperimentConfig(procedure="ccv", train=FAST), False)
        extended = run_experiment(
            feature_corpus,
            ExperimentConfig(procedure="ccv-ext", external_corpora=(external,), train=FAST),
            False,
        )
        for a, b in zip(plain.folds, extended.folds):
            assert b.n_train_sentences == a.n_train_sentences + 10
            assert b.n_test_reviews == a.n_test_reviews
        assert extended.size_label == "L"
        assert extended.provenance["external_corpora"] == [external.fingerprint()]


class TestUnseenCategoryFeatures:
    """A held-out category whose features never occur in training."""

    @pytest.fixture
    def corpus(self, make_corpus):
        seen = ["[video/NN]", "ok/FW", "ok/FW"], ["[playlist/NN]", "ok/FW", "ok/FW"]
        return make_corpus([
            ("s1", "YouTube", "social", 4, seen[0]),
            ("s2", "YouTube", "social", 2, seen[1]),
            ("t1", "Tripit", "travel", 5, seen[1]),
            ("t2", "Tripit", "travel", 1, seen[0]),
            ("e1", "Evernote", "productivity", 3, ["[zyzzyx/FW]"]),
            ("e2", "Evernote", "productivity", 2, ["[zyzzyx/FW]"]),
        ])

    def test_ccv_recall_is_zero(self, corpus):
        result = run_experiment(corpus, ExperimentConfig(procedure="ccv", train=FAST), progress=False)
        held_out = result.folds[0]
        assert held_out.category == "productivity"
        for mode in MODE_KEYS:
            assert held_out.reports[mode].tp == 0
            assert held_out.reports[mode].recall == 0.0

    def test_external_data_with_the_feature_helps(self, corpus, make_corpus):
        external = make_corpus(
            [(f"x{i}", "laptop", "laptop", 3, ["[zyzzyx/FW]"]) for i in range(10)],
            annotator="semeval",
        )
        plain = run_experiment(corpus, ExperimentConfig(procedure="ccv", train=FAST), progress=False)
        extended = run_experiment(
            corpus,
            ExperimentConfig(procedure="ccv-ext", external_corpora=(external,), train=FAST),
            progress=False,
        )
        assert (extended.folds[0].reports["exact_tokens"].recall
                >= plain.folds[0].reports["exact_tokens"].recall)


def test_appcat_and_ccv_on_a_shared_vocabulary():
    corpus = generate_corpus(SyntheticConfig(reviews_per_app=4, shared_fraction=0.7, seed=3))
    for procedure in ("appcat", "ccv"):
        result = run_experiment(corpus, ExperimentConfig(procedure=procedure, k_folds=2, train=FAST), False)
        print(f"{procedure}: macro F1 {result.aggregate['exact_tokens'].f1:.3f}")
        for mode in MODE_KEYS:
            assert 0.0 <= result.aggregate[mode].f1 <= 1.0


class TestReports:
    @pytest.fixture
    def result(self, feature_corpus):
        return run_experiment(feature_corpus, ExperimentConfig(procedure="ccv", train=FAST), progress=False)

    def test_single_result_table(self, result):
        text = render_report([result])
        lines = text.splitlines()
        assert lines[0].startswith("category")
        assert [line.split()[0] for line in lines[2:]] == ["productivity", "social", "travel", "Average"]

    def test_summary_of_several(self, result):
        csv_text = render_report([result, result], "csv")
        rows = csv_text.splitlines()
        assert rows[0].startswith("procedure,exact_tokens_p")
        assert rows[1].startswith("ccv (M),")
        assert len(rows) == 3

    def test_json(self, result):
        payload = json.loads(render_report([result], "json"))
        assert payload["schema"] == "revmine-report/1"
        assert payload["results"][0]["procedure"] == "ccv"

    def test_emit_writes_file(self, result, tmp_path):
        path = tmp_path / "out" / "report.md"
        text = emit_report([result], path, "markdown")
        assert path.read_text(encoding="utf-8") == text
        assert "| **Average** |" in text

    def test_empty(self):
        with pytest.raises(ConfigError):
            render_report([])

    def test_procedure_summary(self, feature_corpus, tmp_path):
        config = ExperimentConfig(k_folds=2, train=FAST)
        results = [per_category_cv(feature_corpus, config), stratified_cv(feature_corpus, config)]
        path = tmp_path / "summary.csv"
        text = emit_procedure_summary(results, path)
        assert [line.split(",")[0] for line in text.splitlines()[1:]] == ["appcat (S)", "scv (M)"]
        assert path.read_text(encoding="utf-8") == text
