"""Training/evaluation procedures over annotated corpora.

    ccv       hold out each app category in turn
    appcat    k-fold cross-validation inside every category
    scv       k-fold cross-validation stratified by category
    ccv-ext   ccv with external annotated corpora added to every training fold
    scv-ext   scv with external corpora added to every training fold

Folds are built at review granularity, run independently (optionally on a
thread pool) and assembled by fold id, so results never depend on ``jobs``.
"""

from __future__ import annotations

import hashlib
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from .corpus import Corpus, Sentence, training_pairs
from .errors import ConfigError, DataError
from .evaluation import MODE_KEYS, EvalReport, evaluate_all, macro_average
from .features import EmbeddingTable, FeatureTemplateConfig
from .logs import LEVELS, get_level, print_warning
from .reports import report_payload, result_table, summary_table
from .settings import VERSION
from .tagger import TrainConfig, predict_spans, train


class Procedure(str, Enum):
    CCV = "ccv"
    APP_CAT = "appcat"
    SCV = "scv"
    CCV_EXT = "ccv-ext"
    SCV_EXT = "scv-ext"

    @property
    def uses_external(self) -> bool:
        return self in (Procedure.CCV_EXT, Procedure.SCV_EXT)

    @property
    def base(self) -> "Procedure":
        return {Procedure.CCV_EXT: Procedure.CCV, Procedure.SCV_EXT: Procedure.SCV}.get(self, self)


@dataclass(frozen=True)
class ExperimentConfig:
    procedure: Procedure = Procedure.CCV
    k_folds: int = 10
    seed: int = 42
    train: TrainConfig = field(default_factory=TrainConfig)
    features: FeatureTemplateConfig = field(default_factory=FeatureTemplateConfig)
    external_corpora: Tuple[Corpus, ...] = ()
    annotator: Optional[str] = None
    jobs: int = 1
    language: Optional[str] = None
    embeddings: Optional[EmbeddingTable] = field(default=None, compare=False)

    def __post_init__(self):
        try:
            object.__setattr__(self, "procedure", Procedure(self.procedure))
        except ValueError:
            known = ", ".join(p.value for p in Procedure)
            raise ConfigError(f"Unknown procedure {self.procedure!r} (expected one of {known})") from None
        object.__setattr__(self, "external_corpora", tuple(self.external_corpora))
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.procedure.uses_external and not self.external_corpora:
            raise ConfigError(f"Procedure {self.procedure.value} needs at least one external corpus")
        if self.features.use_embeddings and self.embeddings is None:
            raise ConfigError("feature config enables embeddings but no embedding table was given")

    def to_dict(self) -> Dict[str, Any]:
        """Everything that influences results (``jobs`` does not)."""
        return {
            "procedure": self.procedure.value,
            "k_folds": self.k_folds,
            "seed": self.seed,
            "train": self.train.to_dict(),
            "features": self.features.to_dict(),
            "external_corpora": [c.fingerprint() for c in self.external_corpora]
            if self.procedure.uses_external else [],
            "annotator": self.annotator,
            "language": self.language,
            "embeddings": self.embeddings.fingerprint() if self.embeddings is not None else None,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Fold:
    fold_id: int
    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]
    category: Optional[str] = None


# ============================================================================
# FOLDS
# ============================================================================

def _ids_by_category(corpus: Corpus) -> Dict[str, List[str]]:
    grouped: Dict[str, List[str]] = {c: [] for c in corpus.categories()}
    for review in corpus.reviews:
        grouped[review.category].append(review.id)
    return grouped


def _in_corpus_order(corpus: Corpus, ids) -> Tuple[str, ...]:
    keep = set(ids)
    return tuple(r.id for r in corpus.reviews if r.id in keep)


def _check_fold_sizes(grouped: Mapping[str, List[str]], k: int) -> None:
    for category, ids in grouped.items():
        if len(ids) < k:
            raise DataError(f"Category {category!r} has {len(ids)} reviews, fewer than k_folds={k}")


def _shuffled(ids: Sequence[str], seed: int, category: str) -> List[str]:
    ids = list(ids)
    random.Random(f"{seed}:{category}").shuffle(ids)
    return ids


def make_folds(corpus: Corpus, config: ExperimentConfig) -> List[Fold]:
    """Review-level folds for the configured procedure."""
    procedure = config.procedure.base
    grouped = _ids_by_category(corpus)
    all_ids = [r.id for r in corpus.reviews]
    k = config.k_folds

    if procedure is Procedure.CCV:
        if len(grouped) < 2:
            raise DataError(f"Cross-category validation needs >= 2 categories, corpus has {len(grouped)}")
        folds = []
        for i, (category, test) in enumerate(grouped.items()):
            held_out = set(test)
            folds.append(Fold(i, tuple(r for r in all_ids if r not in held_out), tuple(test), category))
        return folds

    _check_fold_sizes(grouped, k)

    if procedure is Procedure.APP_CAT:
        folds = []
        for category, ids in grouped.items():
            buckets: List[List[str]] = [[] for _ in range(k)]
            for i, rid in enumerate(_shuffled(ids, config.seed, category)):
                buckets[i % k].append(rid)
            for j in range(k):
                train_ids = [rid for b, bucket in enumerate(buckets) if b != j for rid in bucket]
                folds.append(Fold(
                    len(folds),
                    _in_corpus_order(corpus, train_ids),
                    _in_corpus_order(corpus, buckets[j]),
                    category,
                ))
        return folds

    # SCV: every category is dealt round-robin over the k folds; the start
    # offset rotates so fold sizes stay within one review of each other.
    buckets = [[] for _ in range(k)]
    offset = 0
    for category, ids in grouped.items():
        for i, rid in enumerate(_shuffled(ids, config.seed, category)):
            buckets[(i + offset) % k].append(rid)
        offset = (offset + len(ids)) % k
    folds = []
    for j in range(k):
        test = set(buckets[j])
        folds.append(Fold(j, tuple(r for r in all_ids if r not in test), _in_corpus_order(corpus, test)))
    return folds


# ============================================================================
# EXTERNAL DATA
# ============================================================================

def external_annotator(external: Corpus, annotator: Optional[str]) -> str:
    if annotator is not None and annotator in external.annotator_ids:
        return annotator
    return external.resolve_annotator(None)


def augment_training(train_corpus: Corpus, external_corpora: Sequence[Corpus],
                     annotator: Optional[str] = None) -> List[Tuple[Sentence, Tuple[str, ...]]]:
    """Training pairs of the primary corpus followed by those of each external corpus."""
    primary = train_corpus.resolve_annotator(annotator)
    pairs = training_pairs(train_corpus, primary)
    for external in external_corpora:
        if external.language != train_corpus.language:
            raise DataError(
                f"External corpus language {external.language!r} differs from {train_corpus.language!r}"
            )
        pairs.extend(training_pairs(external, external_annotator(external, annotator)))
    return pairs


# ============================================================================
# RESULTS
# ============================================================================

@dataclass
class FoldResult:
    fold_id: int
    category: Optional[str]
    n_train_reviews: int
    n_test_reviews: int
    n_train_sentences: int
    n_test_sentences: int
    reports: Dict[str, EvalReport]
    train_meta: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fold_id": self.fold_id,
            "category": self.category,
            "n_train_reviews": self.n_train_reviews,
            "n_test_reviews": self.n_test_reviews,
            "n_train_sentences": self.n_train_sentences,
            "n_test_sentences": self.n_test_sentences,
            "reports": {k: r.to_dict() for k, r in self.reports.items()},
            "train_meta": self.train_meta,
        }


@dataclass
class ExperimentResult:
    procedure: Procedure
    config: Dict[str, Any]
    folds: List[FoldResult]
    per_category: Dict[str, Dict[str, EvalReport]]
    aggregate: Dict[str, EvalReport]
    provenance: Dict[str, Any]
    size_label: str
    warnings: List[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"{self.procedure.value} ({self.size_label})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "procedure": self.procedure.value,
            "size_label": self.size_label,
            "config": self.config,
            "provenance": self.provenance,
            "aggregate": {k: r.to_dict() for k, r in self.aggregate.items()},
            "per_category": {
                c: {k: r.to_dict() for k, r in reports.items()} for c, reports in sorted(self.per_category.items())
            },
            "folds": [f.to_dict() for f in self.folds],
            "warnings": self.warnings,
        }


def size_label(mean_train_sentences: float, corpus_sentences: int) -> str:
    """S/M/L from the mean training-fold size relative to the whole corpus."""
    ratio = mean_train_sentences / corpus_sentences if corpus_sentences else 0.0
    if ratio < 0.5:
        return "S"
    return "M" if ratio <= 1.0 else "L"


def run_fold(corpus: Corpus, fold: Fold, config: ExperimentConfig, annotator: str) -> FoldResult:
    train_corpus = corpus.select_reviews(fold.train_ids)
    test_corpus = corpus.select_reviews(fold.test_ids)
    if config.procedure.uses_external:
        pairs = augment_training(train_corpus, config.external_corpora, annotator)
    else:
        pairs = training_pairs(train_corpus, annotator)
    model = train(pairs, config.features, config.embeddings, config.train)
    predicted = predict_spans(model, test_corpus, config.embeddings)
    gold = test_corpus.spans_for(annotator)
    reports = evaluate_all(predicted, gold, test_corpus, config.language or corpus.language)
    return FoldResult(
        fold_id=fold.fold_id,
        category=fold.category,
        n_train_reviews=len(train_corpus),
        n_test_reviews=len(test_corpus),
        n_train_sentences=len(pairs),
        n_test_sentences=test_corpus.n_sentences,
        reports=reports,
        train_meta={k: model.train_meta.get(k) for k in ("iterations", "final_objective", "converged")},
    )


def _per_category(folds: Sequence[FoldResult]) -> Dict[str, Dict[str, EvalReport]]:
    """Macro over the folds that test a category, per category and mode."""
    collected: Dict[str, Dict[str, List[EvalReport]]] = {}
    for fold in folds:
        for mode in MODE_KEYS:
            for category, report in fold.reports[mode].per_category.items():
                collected.setdefault(category, {m: [] for m in MODE_KEYS})[mode].append(report)
    return {
        category: {mode: macro_average(reports) for mode, reports in by_mode.items()}
        for category, by_mode in sorted(collected.items())
    }


def run_experiment(corpus: Corpus, config: ExperimentConfig, progress: bool = True) -> ExperimentResult:
    """Run every fold of the procedure and aggregate per category, then overall."""
    annotator = corpus.resolve_annotator(config.annotator)
    for external in config.external_corpora if config.procedure.uses_external else ():
        if external.language != corpus.language:
            raise DataError(f"External corpus language {external.language!r} differs from {corpus.language!r}")
    folds = make_folds(corpus, config)

    results: Dict[int, FoldResult] = {}
    bar = tqdm(
        total=len(folds),
        desc=config.procedure.value,
        unit="fold",
        file=sys.stderr,
        disable=not progress or get_level() < LEVELS["info"],
    )
    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        futures = {executor.submit(run_fold, corpus, fold, config, annotator): fold.fold_id for fold in folds}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
            bar.update(1)
    bar.close()

    ordered = [results[fold.fold_id] for fold in folds]
    per_category = _per_category(ordered)
    aggregate = {mode: macro_average([reports[mode] for reports in per_category.values()]) for mode in MODE_KEYS}
    mean_train = sum(f.n_train_sentences for f in ordered) / len(ordered)
    warnings = [
        f"fold {f.fold_id}: training stopped before convergence"
        for f in ordered if f.train_meta.get("iterations") and not f.train_meta.get("converged")
    ]
    for message in warnings:
        print_warning(message)
    return ExperimentResult(
        procedure=config.procedure,
        config=config.to_dict(),
        folds=ordered,
        per_category=per_category,
        aggregate=aggregate,
        provenance={
            "version": VERSION,
            "config_hash": config.config_hash(),
            "corpus": corpus.fingerprint(),
            "external_corpora": config.to_dict()["external_corpora"],
            "annotator": annotator,
            "n_folds": len(ordered),
        },
        size_label=size_label(mean_train, corpus.n_sentences),
        warnings=warnings,
    )


def _with_procedure(config: ExperimentConfig, procedure: Procedure) -> ExperimentConfig:
    return replace(config, procedure=procedure)


def cross_category_validation(corpus: Corpus, config: Optional[ExperimentConfig] = None) -> ExperimentResult:
    return run_experiment(corpus, _with_procedure(config or ExperimentConfig(), Procedure.CCV))


def per_category_cv(corpus: Corpus, config: Optional[ExperimentConfig] = None) -> ExperimentResult:
    return run_experiment(corpus, _with_procedure(config or ExperimentConfig(), Procedure.APP_CAT))


def stratified_cv(corpus: Corpus, config: Optional[ExperimentConfig] = None) -> ExperimentResult:
    return run_experiment(corpus, _with_procedure(config or ExperimentConfig(), Procedure.SCV))


# ============================================================================
# REPORT EMISSION
# ============================================================================

def _write(text: str, path: Union[str, Path, None]) -> str:
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


def render_report(results: Sequence[ExperimentResult], format: str = "text") -> str:
    """One result: per-category table with Average row. Several: one row per procedure."""
    if not results:
        raise ConfigError("No experiment results to report")
    if format == "json":
        return json.dumps(report_payload(results), ensure_ascii=False, indent=2) + "\n"
    if len(results) == 1:
        return result_table(results[0].per_category, results[0].aggregate, format)
    return summary_table([(r.label, r.aggregate) for r in results], format)


def emit_report(results: Sequence[ExperimentResult], path: Union[str, Path, None] = None,
                format: str = "csv") -> str:
    return _write(render_report(results, format), path)


def emit_procedure_summary(results: Sequence[ExperimentResult], path: Union[str, Path, None] = None,
                           format: str = "csv") -> str:
    if not results:
        raise ConfigError("No experiment results to report")
    return _write(summary_table([(r.label, r.aggregate) for r in results], format), path)


def emit_sweep(sweep: Any, path: Union[str, Path, None] = None) -> str:
    """Tidy ``mode,cutoff,min_f1,avg_f1,max_f1`` CSV of a length cut-off sweep."""
    return _write(sweep.to_csv(), path)
