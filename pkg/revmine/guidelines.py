"""Annotation-guideline simulation.

Each step maps a corpus to a corpus by removing spans of one annotator
(never editing them) and reports what it removed:

    preprocess   drop reviews without any annotated feature
    self_refs    drop spans that name the app itself ("app", the app's name)
    nounless     drop spans without a noun-tagged token
    length_cap   drop spans longer than ``max_len`` tokens

``run_pipeline`` chains the steps in that order; ``length_cutoff_sweep``
repeats the last step for several caps and scores each capped corpus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .corpus import AnnotationSpan, Corpus, DatasetStats, compute_stats
from .errors import ConfigError, DataError
from .evaluation import MODE_KEYS
from .experiments import ExperimentConfig, run_experiment
from .logs import print_progress
from .reports import render_table
from .settings import default_noun_tags, default_self_reference_lexicon


class Step(str, Enum):
    PREPROCESS = "preprocess"
    SELF_REFS = "self_refs"
    NOUNLESS = "nounless"
    LENGTH_CAP = "length_cap"


STEP_ORDER: Tuple[Step, ...] = tuple(Step)

STEP_ALIASES: Dict[str, Step] = {
    "pre": Step.PREPROCESS,
    "self": Step.SELF_REFS,
    "noun": Step.NOUNLESS,
    "len": Step.LENGTH_CAP,
    **{step.value: step for step in Step},
}

Cutoff = Optional[Union[int, float]]


def parse_steps(steps: Union[str, Iterable[Union[str, Step]]]) -> Tuple[Step, ...]:
    """Resolve step names or aliases ("pre,self,noun,len")."""
    if isinstance(steps, str):
        steps = [s.strip() for s in steps.split(",") if s.strip()]
    parsed = []
    for name in steps:
        if isinstance(name, Step):
            parsed.append(name)
            continue
        try:
            parsed.append(STEP_ALIASES[name.lower()])
        except KeyError:
            known = ", ".join(sorted(STEP_ALIASES))
            raise ConfigError(f"Unknown simulation step {name!r} (expected one of {known})") from None
    return tuple(parsed)


@dataclass(frozen=True)
class RemovedExample:
    review_id: str
    text: str
    reason: str


@dataclass
class RemovalReport:
    step_name: str
    spans_removed: int
    reviews_removed: int
    removed_examples: List[RemovedExample]
    stats_before: DatasetStats
    stats_after: DatasetStats

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step_name": self.step_name,
            "spans_removed": self.spans_removed,
            "reviews_removed": self.reviews_removed,
            "removed_examples": [vars(e) for e in self.removed_examples],
            "stats_before": self.stats_before.to_dict(),
            "stats_after": self.stats_after.to_dict(),
        }


@dataclass(frozen=True)
class PipelineConfig:
    steps: Tuple[Step, ...] = STEP_ORDER
    max_len: int = 3
    self_ref_lexicon: Optional[frozenset] = None
    noun_tags: Optional[frozenset] = None
    drop_empty_reviews_after_each_step: bool = True
    enforce_order: bool = True
    annotator: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "steps", parse_steps(self.steps))
        if self.max_len < 1:
            raise ConfigError("max_len must be >= 1")
        if self.self_ref_lexicon is not None:
            object.__setattr__(self, "self_ref_lexicon", frozenset(w.lower() for w in self.self_ref_lexicon))
        if self.noun_tags is not None:
            object.__setattr__(self, "noun_tags", frozenset(self.noun_tags))
        if self.enforce_order:
            ranks = [STEP_ORDER.index(s) for s in self.steps]
            if any(b <= a for a, b in zip(ranks, ranks[1:])):
                order = " -> ".join(s.value for s in STEP_ORDER)
                raise ConfigError(f"Steps must follow {order} without repeats (set enforce_order=False to override)")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": [s.value for s in self.steps],
            "max_len": self.max_len,
            "self_ref_lexicon": sorted(self.self_ref_lexicon) if self.self_ref_lexicon is not None else None,
            "noun_tags": sorted(self.noun_tags) if self.noun_tags is not None else None,
            "drop_empty_reviews_after_each_step": self.drop_empty_reviews_after_each_step,
            "enforce_order": self.enforce_order,
            "annotator": self.annotator,
        }


# ============================================================================
# STEPS
# ============================================================================

def _drop_empty_reviews(corpus: Corpus, annotator: str) -> Corpus:
    annotated = {s.review_id for s in corpus.annotations if s.annotator == annotator}
    if len(annotated) == len(corpus):
        return corpus
    return corpus.select_reviews(r.id for r in corpus.reviews if r.id in annotated)


def _remove(corpus: Corpus, annotator: Optional[str], step: Step,
            reason_for: Callable[[AnnotationSpan], Optional[str]],
            drop_empty: bool) -> Tuple[Corpus, RemovalReport]:
    annotator = corpus.resolve_annotator(annotator)
    before = compute_stats(corpus, annotator)
    kept, removed = [], []
    for span in corpus.annotations:
        reason = reason_for(span) if span.annotator == annotator else None
        if reason is None:
            kept.append(span)
        else:
            removed.append(RemovedExample(span.review_id, corpus.span_text(span), reason))
    result = corpus.with_annotations(kept) if removed else corpus
    if drop_empty:
        result = _drop_empty_reviews(result, annotator)
    after = compute_stats(result, annotator)
    report = RemovalReport(
        step_name=step.value,
        spans_removed=before.feature_tokens - after.feature_tokens,
        reviews_removed=before.n_reviews - after.n_reviews,
        removed_examples=removed,
        stats_before=before,
        stats_after=after,
    )
    return result, report


def preprocess(corpus: Corpus, annotator: Optional[str] = None) -> Tuple[Corpus, RemovalReport]:
    """Keep only reviews with at least one span of the annotator."""
    return _remove(corpus, annotator, Step.PREPROCESS, lambda span: None, drop_empty=True)


def self_reference_lexicon(corpus: Corpus, lexicon: Optional[Iterable[str]] = None) -> frozenset:
    """Given (or default) lexicon plus the lowercased app names of the corpus."""
    if lexicon is None:
        base = set(default_self_reference_lexicon())
    else:
        base = {w.lower() for w in lexicon}
        if not base:
            raise ConfigError("self-reference lexicon must not be empty")
    return frozenset(base | {" ".join(app.lower().split()) for app in corpus.apps()})


def remove_self_references(corpus: Corpus, lexicon: Optional[Iterable[str]] = None,
                           annotator: Optional[str] = None,
                           drop_empty: bool = True) -> Tuple[Corpus, RemovalReport]:
    """Remove spans whose whole lowercased text is a self-reference."""
    words = self_reference_lexicon(corpus, lexicon)

    def reason_for(span: AnnotationSpan) -> Optional[str]:
        text = corpus.span_text(span).lower()
        if text == " ".join(corpus.review(span.review_id).app.lower().split()):
            return f"own app name {text!r}"
        if text in words:
            return f"self-reference {text!r}"
        return None

    return _remove(corpus, annotator, Step.SELF_REFS, reason_for, drop_empty)


def remove_nounless(corpus: Corpus, noun_tags: Optional[Iterable[str]] = None,
                    annotator: Optional[str] = None,
                    drop_empty: bool = True) -> Tuple[Corpus, RemovalReport]:
    """Remove spans without a noun; every span token must carry a POS tag."""
    tags = frozenset(noun_tags) if noun_tags is not None else frozenset(default_noun_tags())

    def reason_for(span: AnnotationSpan) -> Optional[str]:
        tokens = corpus.sentence(span.review_id, span.sentence_index).tokens[span.start:span.end]
        for token in tokens:
            if not token.pos:
                raise DataError(
                    f"Token {token.text!r} (review {span.review_id}, sentence {span.sentence_index}, "
                    f"position {token.index}) has no POS tag; run the fallback tagger first"
                )
        if any(token.pos in tags for token in tokens):
            return None
        return "no noun (" + " ".join(token.pos for token in tokens) + ")"

    return _remove(corpus, annotator, Step.NOUNLESS, reason_for, drop_empty)


def cap_feature_length(corpus: Corpus, max_len: Cutoff = 3, annotator: Optional[str] = None,
                       drop_empty: bool = True) -> Tuple[Corpus, RemovalReport]:
    """Remove (not truncate) spans longer than ``max_len``; None or inf caps nothing."""
    limit = math.inf if max_len is None else max_len
    if limit < 1:
        raise ConfigError("max_len must be >= 1")

    def reason_for(span: AnnotationSpan) -> Optional[str]:
        return f"{span.length} words > {max_len}" if span.length > limit else None

    return _remove(corpus, annotator, Step.LENGTH_CAP, reason_for, drop_empty)


def run_step(corpus: Corpus, step: Union[Step, str], config: PipelineConfig,
             annotator: Optional[str] = None) -> Tuple[Corpus, RemovalReport]:
    step = parse_steps([step])[0]
    drop_empty = config.drop_empty_reviews_after_each_step
    if step is Step.PREPROCESS:
        return preprocess(corpus, annotator)
    if step is Step.SELF_REFS:
        return remove_self_references(corpus, config.self_ref_lexicon, annotator, drop_empty)
    if step is Step.NOUNLESS:
        return remove_nounless(corpus, config.noun_tags, annotator, drop_empty)
    return cap_feature_length(corpus, config.max_len, annotator, drop_empty)


def run_pipeline(corpus: Corpus, config: Optional[PipelineConfig] = None) -> Tuple[Corpus, List[RemovalReport]]:
    """Apply the configured steps in order; reports chain before -> after."""
    config = config or PipelineConfig()
    if not config.steps:
        return corpus, []
    annotator = corpus.resolve_annotator(config.annotator)
    reports = []
    for step in config.steps:
        corpus, report = run_step(corpus, step, config, annotator)
        reports.append(report)
    return corpus, reports


# ============================================================================
# LENGTH CUT-OFF SWEEP
# ============================================================================

def cutoff_label(cutoff: Cutoff) -> str:
    return "inf" if cutoff is None or cutoff == math.inf else str(int(cutoff))


def parse_cutoffs(text: str) -> List[Cutoff]:
    """"1,2,3,4,inf" -> [1, 2, 3, 4, None]."""
    cutoffs: List[Cutoff] = []
    for raw in text.split(","):
        raw = raw.strip().lower()
        if not raw:
            continue
        if raw in ("inf", "none", "∞"):
            cutoffs.append(None)
            continue
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"Invalid cut-off {raw!r} (expected a positive integer or 'inf')") from None
        if value < 1:
            raise ConfigError(f"Cut-off must be >= 1, got {value}")
        cutoffs.append(value)
    if not cutoffs:
        raise ConfigError("No cut-offs given")
    return cutoffs


@dataclass
class SweepRow:
    mode: str
    cutoff: str
    per_dataset: Dict[str, float]
    min_f1: float
    avg_f1: float
    max_f1: float

    def to_dict(self) -> Dict[str, Any]:
        return vars(self).copy()


@dataclass
class SweepTable:
    """F1 per evaluation mode and cut-off across datasets (min/avg/max series)."""

    datasets: List[str]
    cutoffs: List[str]
    rows: List[SweepRow] = field(default_factory=list)

    def row(self, mode: str, cutoff: Cutoff) -> SweepRow:
        label = cutoff if isinstance(cutoff, str) else cutoff_label(cutoff)
        for row in self.rows:
            if row.mode == mode and row.cutoff == label:
                return row
        raise KeyError((mode, label))

    def to_csv(self) -> str:
        rows = [[r.mode, r.cutoff, f"{r.min_f1:.4f}", f"{r.avg_f1:.4f}", f"{r.max_f1:.4f}"] for r in self.rows]
        return render_table(("mode", "cutoff", "min_f1", "avg_f1", "max_f1"), rows, "csv")

    def to_text(self, format: str = "text") -> str:
        headers = ["mode", "cutoff"] + list(self.datasets) + ["min", "avg", "max"]
        rows = [
            [r.mode, r.cutoff] + [f"{100 * r.per_dataset[d]:.1f}" for d in self.datasets]
            + [f"{100 * r.min_f1:.1f}", f"{100 * r.avg_f1:.1f}", f"{100 * r.max_f1:.1f}"]
            for r in self.rows
        ]
        return render_table(headers, rows, format)

    def to_dict(self) -> Dict[str, Any]:
        return {"datasets": self.datasets, "cutoffs": self.cutoffs, "rows": [r.to_dict() for r in self.rows]}


def length_cutoff_sweep(corpora: Union[Corpus, Mapping[str, Corpus]], cutoffs: Sequence[Cutoff],
                        eval_config: Optional[ExperimentConfig] = None,
                        annotator: Optional[str] = None,
                        drop_empty: bool = True) -> SweepTable:
    """Cap each corpus at every cut-off, run the experiment, record F1 per mode.

    Corpora are expected to have passed the noun-less step already.
    """
    if isinstance(corpora, Corpus):
        corpora = {"dataset": corpora}
    if not corpora:
        raise ConfigError("length_cutoff_sweep needs at least one corpus")
    eval_config = eval_config or ExperimentConfig()
    if annotator is not None:
        eval_config = replace(eval_config, annotator=annotator)
    labels = [cutoff_label(c) for c in cutoffs]
    scores: Dict[Tuple[str, str], Dict[str, float]] = {(m, c): {} for m in MODE_KEYS for c in labels}
    for name, corpus in corpora.items():
        for cutoff, label in zip(cutoffs, labels):
            print_progress(f"{name}: cut-off {label}")
            if cutoff is None or cutoff == math.inf:
                capped = corpus
            else:
                capped, _ = cap_feature_length(corpus, cutoff, eval_config.annotator, drop_empty)
            result = run_experiment(capped, eval_config)
            for mode in MODE_KEYS:
                scores[(mode, label)][name] = result.aggregate[mode].f1
    table = SweepTable(datasets=list(corpora), cutoffs=labels)
    for mode in MODE_KEYS:
        for label in labels:
            values = scores[(mode, label)]
            series = [values[d] for d in table.datasets]
            table.rows.append(SweepRow(
                mode=mode,
                cutoff=label,
                per_dataset=dict(values),
                min_f1=min(series),
                avg_f1=sum(series) / len(series),
                max_f1=max(series),
            ))
    return table
