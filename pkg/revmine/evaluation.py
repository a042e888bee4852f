"""Span evaluation: exact/partial matching over feature tokens and feature types,
stemming for type keys, macro averaging and Dice agreement.

Matching is one-to-one and greedy in textual order, so a single gold span
can never be credited twice.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from nltk.stem import PorterStemmer, SnowballStemmer

from .corpus import AnnotationSpan, Corpus
from .errors import ConfigError, DataError


class MatchMode(str, Enum):
    EXACT = "exact"
    PARTIAL = "partial"


class UnitMode(str, Enum):
    TOKEN = "token"
    TYPE = "type"


# Column order of every report table.
EVAL_MODES: Tuple[Tuple[MatchMode, UnitMode], ...] = (
    (MatchMode.EXACT, UnitMode.TOKEN),
    (MatchMode.PARTIAL, UnitMode.TOKEN),
    (MatchMode.EXACT, UnitMode.TYPE),
    (MatchMode.PARTIAL, UnitMode.TYPE),
)

MODE_TITLES = {
    "exact_tokens": "Exact Tokens",
    "partial_tokens": "Partial Tokens",
    "exact_types": "Exact Types",
    "partial_types": "Partial Types",
}


def mode_key(match: Union[MatchMode, str], unit: Union[UnitMode, str]) -> str:
    return f"{MatchMode(match).value}_{UnitMode(unit).value}s"


MODE_KEYS: Tuple[str, ...] = tuple(mode_key(m, u) for m, u in EVAL_MODES)


def prf(tp: int, fp: int, fn: int) -> Tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class EvalReport:
    match: MatchMode
    unit: UnitMode
    tp: int = 0
    fp: int = 0
    fn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    per_category: Dict[str, "EvalReport"] = field(default_factory=dict)
    macro: Optional["EvalReport"] = None

    @classmethod
    def from_counts(cls, match, unit, tp: int, fp: int, fn: int) -> "EvalReport":
        precision, recall, f1 = prf(tp, fp, fn)
        return cls(MatchMode(match), UnitMode(unit), tp, fp, fn, precision, recall, f1)

    @property
    def mode(self) -> Tuple[MatchMode, UnitMode]:
        return (self.match, self.unit)

    @property
    def key(self) -> str:
        return mode_key(self.match, self.unit)

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "mode": self.key,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.per_category:
            result["per_category"] = {c: r.to_dict() for c, r in sorted(self.per_category.items())}
        if self.macro is not None:
            result["macro"] = self.macro.to_dict()
        return result


# ============================================================================
# STEMMING AND TYPE KEYS
# ============================================================================

_porter = PorterStemmer()
_snowball = SnowballStemmer("english")

# german has no stemmer here; it lowercases like "none".
STEMMERS: Dict[str, Callable[[str], str]] = {
    "english": _porter.stem,
    "english_snowball": _snowball.stem,
    "german": str.lower,
    "none": str.lower,
}


@lru_cache(maxsize=65536)
def stem(word: str, language: str = "english") -> str:
    try:
        stemmer = STEMMERS[language]
    except KeyError:
        raise ConfigError(
            f"Unsupported stemming language {language!r} (expected one of {', '.join(sorted(STEMMERS))})"
        ) from None
    return stemmer(word.lower()).lower()


def type_key(words: Union[str, Sequence[str]], language: str = "english") -> str:
    """Space-joined stems of the lowercased span words."""
    if isinstance(words, str):
        words = words.split()
    return " ".join(stem(w, language) for w in words)


# ============================================================================
# MATCHING
# ============================================================================

def spans_match(pred: AnnotationSpan, gold: AnnotationSpan, mode: Union[MatchMode, str]) -> bool:
    if (pred.review_id, pred.sentence_index) != (gold.review_id, gold.sentence_index):
        return False
    if MatchMode(mode) is MatchMode.EXACT:
        return (pred.start, pred.end) == (gold.start, gold.end)
    overlap = max(0, min(pred.end, gold.end) - max(pred.start, gold.start))
    symmetric_difference = pred.length + gold.length - 2 * overlap
    return overlap >= 1 and symmetric_difference <= 1


def _textual(span: AnnotationSpan) -> Tuple[str, int, int, int]:
    return span.key


def match_tokens(pred: Sequence[AnnotationSpan], gold: Sequence[AnnotationSpan],
                 mode: Union[MatchMode, str]) -> List[Tuple[AnnotationSpan, AnnotationSpan]]:
    """Greedy one-to-one pairs: each prediction, in textual order, takes the
    first unmatched gold span of its sentence that it matches."""
    gold_by_sentence: Dict[Tuple[str, int], List[AnnotationSpan]] = defaultdict(list)
    for g in sorted(gold, key=_textual):
        gold_by_sentence[(g.review_id, g.sentence_index)].append(g)
    used: set = set()
    pairs = []
    for p in sorted(pred, key=_textual):
        for i, g in enumerate(gold_by_sentence.get((p.review_id, p.sentence_index), ())):
            slot = (p.review_id, p.sentence_index, i)
            if slot not in used and spans_match(p, g, mode):
                used.add(slot)
                pairs.append((p, g))
                break
    return pairs


def _token_report(pred, gold, mode) -> EvalReport:
    tp = len(match_tokens(pred, gold, mode))
    return EvalReport.from_counts(mode, UnitMode.TOKEN, tp, len(pred) - tp, len(gold) - tp)


def _by_category(spans: Iterable[AnnotationSpan], categories: Mapping[str, str]) -> Dict[str, List[AnnotationSpan]]:
    grouped: Dict[str, List[AnnotationSpan]] = defaultdict(list)
    for span in spans:
        grouped[categories.get(span.review_id, "")].append(span)
    return grouped


def _category_map(corpus_or_map: Union[Corpus, Mapping[str, str], None]) -> Optional[Mapping[str, str]]:
    if corpus_or_map is None:
        return None
    if isinstance(corpus_or_map, Corpus):
        return corpus_or_map.category_of()
    return corpus_or_map


def _with_breakdown(report: EvalReport, pred, gold, categories: Optional[Mapping[str, str]],
                    build: Callable[[List[AnnotationSpan], List[AnnotationSpan]], EvalReport]) -> EvalReport:
    if categories is None:
        return report
    pred_by = _by_category(pred, categories)
    gold_by = _by_category(gold, categories)
    for category in sorted(set(categories.values())):
        report.per_category[category] = build(pred_by.get(category, []), gold_by.get(category, []))
    if report.per_category:
        report.macro = macro_average(report.per_category)
    return report


def evaluate_tokens(pred: Sequence[AnnotationSpan], gold: Sequence[AnnotationSpan],
                    match: Union[MatchMode, str] = MatchMode.EXACT,
                    categories: Union[Corpus, Mapping[str, str], None] = None) -> EvalReport:
    """Every feature instance counts; categories come from a corpus or a
    review-id -> category map."""
    match = MatchMode(match)
    pred, gold = list(pred), list(gold)
    report = _token_report(pred, gold, match)
    return _with_breakdown(report, pred, gold, _category_map(categories),
                           lambda p, g: _token_report(p, g, match))


def keys_match(pred_key: str, gold_key: str, mode: Union[MatchMode, str]) -> bool:
    if MatchMode(mode) is MatchMode.EXACT:
        return pred_key == gold_key
    a, b = Counter(pred_key.split()), Counter(gold_key.split())
    overlap = sum((a & b).values())
    symmetric_difference = sum(a.values()) + sum(b.values()) - 2 * overlap
    return overlap >= 1 and symmetric_difference <= 1


def match_types(pred_keys: Iterable[str], gold_keys: Iterable[str],
                mode: Union[MatchMode, str]) -> List[Tuple[str, str]]:
    gold_sorted = sorted(set(gold_keys))
    pred_sorted = sorted(set(pred_keys))
    if MatchMode(mode) is MatchMode.EXACT:
        common = set(pred_sorted) & set(gold_sorted)
        return [(k, k) for k in sorted(common)]
    used: set = set()
    pairs = []
    for p in pred_sorted:
        for g in gold_sorted:
            if g not in used and keys_match(p, g, mode):
                used.add(g)
                pairs.append((p, g))
                break
    return pairs


def _type_report(pred, gold, mode, corpus: Corpus, language: str) -> EvalReport:
    pred_keys = {type_key(corpus.span_words(s), language) for s in pred}
    gold_keys = {type_key(corpus.span_words(s), language) for s in gold}
    tp = len(match_types(pred_keys, gold_keys, mode))
    return EvalReport.from_counts(mode, UnitMode.TYPE, tp, len(pred_keys) - tp, len(gold_keys) - tp)


def evaluate_types(pred: Sequence[AnnotationSpan], gold: Sequence[AnnotationSpan],
                   match: Union[MatchMode, str], corpus: Corpus,
                   language: Optional[str] = None, by_category: bool = True) -> EvalReport:
    """Each distinct stemmed feature counts once (per category in the breakdown)."""
    match = MatchMode(match)
    language = language or corpus.language
    pred, gold = list(pred), list(gold)
    report = _type_report(pred, gold, match, corpus, language)
    return _with_breakdown(report, pred, gold, corpus.category_of() if by_category else None,
                           lambda p, g: _type_report(p, g, match, corpus, language))


def evaluate_all(pred: Sequence[AnnotationSpan], gold: Sequence[AnnotationSpan], corpus: Corpus,
                 language: Optional[str] = None) -> Dict[str, EvalReport]:
    """Reports for the four evaluation procedures keyed by ``MODE_KEYS``."""
    reports = {}
    for match, unit in EVAL_MODES:
        if unit is UnitMode.TOKEN:
            reports[mode_key(match, unit)] = evaluate_tokens(pred, gold, match, corpus)
        else:
            reports[mode_key(match, unit)] = evaluate_types(pred, gold, match, corpus, language)
    return reports


# ============================================================================
# AGGREGATION AND AGREEMENT
# ============================================================================

def macro_average(reports: Union[Mapping[str, EvalReport], Sequence[EvalReport]]) -> EvalReport:
    """Unweighted mean of P, R and F1; counts are summed."""
    items = list(reports.values()) if isinstance(reports, Mapping) else list(reports)
    if not items:
        raise DataError("macro_average needs at least one report")
    n = len(items)
    first = items[0]
    return EvalReport(
        match=first.match,
        unit=first.unit,
        tp=sum(r.tp for r in items),
        fp=sum(r.fp for r in items),
        fn=sum(r.fn for r in items),
        precision=sum(r.precision for r in items) / n,
        recall=sum(r.recall for r in items) / n,
        f1=sum(r.f1 for r in items) / n,
    )


def dice_agreement(spans_a: Iterable[AnnotationSpan], spans_b: Iterable[AnnotationSpan]) -> float:
    """2|A∩B| / (|A|+|B|) over exact (review, sentence, start, end); 1.0 when both are empty."""
    a = {s.key for s in spans_a}
    b = {s.key for s in spans_b}
    if not a and not b:
        return 1.0
    return 2 * len(a & b) / (len(a) + len(b))
