"""Annotated app-review corpora: data model, file formats, BIO conversion,
dataset statistics and stratified sampling.

A corpus is immutable. Every transformation builds a new one, so corpora
can be shared freely between threads.

File formats
------------
JSONL (canonical), one review per line::

    {"id": "r1", "app": "Pinterest", "category": "social", "rating": 5,
     "sentences": [{"tokens": [{"t": "Love", "pos": "VB"}, ...]}],
     "annotations": [{"annotator": "a1", "sentence": 0, "start": 1, "end": 3}]}

An optional first line ``{"metadata": {...}, "annotators": [...]}`` carries
corpus metadata and annotators that own no spans.

CoNLL TSV: ``TOKEN<TAB>POS<TAB>BIO`` (one BIO column per annotator), blank
line after each sentence, ``#review id=... app=... category=... rating=...
annotator=a1,a2`` before each review and an optional ``#corpus {json}`` line
at the top. A sentence without tokens is written as a ``#empty-sentence`` line.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import (
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from .errors import ConfigError, DataError, ParseError

LABELS: Tuple[str, str, str] = ("B", "I", "O")
EMPTY_SENTENCE_MARKER = "#empty-sentence"
FORMATS = ("jsonl", "conll")
STRATA = ("rating",)

PathLike = Union[str, Path]


# ============================================================================
# DATA MODEL
# ============================================================================

@dataclass(frozen=True)
class Token:
    text: str
    pos: Optional[str] = None
    index: int = 0

    def __post_init__(self):
        if not self.text or any(ch.isspace() for ch in self.text):
            raise DataError(f"Token text must be non-empty without whitespace: {self.text!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: Tuple[Token, ...]
    sentence_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for i, token in enumerate(self.tokens):
            if token.index != i:
                raise DataError(
                    f"Token index {token.index} at position {i} in sentence {self.sentence_index}"
                )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> List[str]:
        return [t.text for t in self.tokens]

    @classmethod
    def from_words(cls, words: Sequence[str], pos: Optional[Sequence[Optional[str]]] = None,
                   sentence_index: int = 0) -> "Sentence":
        tags = list(pos) if pos is not None else [None] * len(words)
        return cls(
            tokens=tuple(Token(w, tags[i], i) for i, w in enumerate(words)),
            sentence_index=sentence_index,
        )


@dataclass(frozen=True)
class Review:
    id: str
    app: str
    category: str
    rating: int
    sentences: Tuple[Sentence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if isinstance(self.rating, bool) or not isinstance(self.rating, int) or not 1 <= self.rating <= 5:
            raise DataError(f"Review {self.id}: rating must be an integer in 1..5, got {self.rating!r}")
        for i, sentence in enumerate(self.sentences):
            if sentence.sentence_index != i:
                raise DataError(f"Review {self.id}: sentence {i} carries index {sentence.sentence_index}")


@dataclass(frozen=True)
class AnnotationSpan:
    """Consecutive token range [start, end) marking one app-feature instance."""

    annotator: str
    review_id: str
    sentence_index: int
    start: int
    end: int

    @property
    def key(self) -> Tuple[str, int, int, int]:
        return (self.review_id, self.sentence_index, self.start, self.end)

    @property
    def length(self) -> int:
        return self.end - self.start

    def positions(self) -> range:
        return range(self.start, self.end)

    def overlaps(self, other: "AnnotationSpan") -> bool:
        return (
            self.review_id == other.review_id
            and self.sentence_index == other.sentence_index
            and self.start < other.end
            and other.start < self.end
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LabeledSequence:
    review_id: str
    sentence_index: int
    labels: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        prev = "O"
        for i, label in enumerate(self.labels):
            if label not in LABELS:
                raise DataError(f"Invalid BIO label {label!r}")
            if label == "I" and (i == 0 or prev == "O"):
                raise DataError(f"Invalid BIO sequence at position {i}: {' '.join(self.labels)}")
            prev = label


@dataclass(frozen=True)
class Corpus:
    reviews: Tuple[Review, ...] = ()
    annotations: Tuple[AnnotationSpan, ...] = ()
    annotator_ids: FrozenSet[str] = frozenset()
    metadata: Mapping[str, Any] = field(default_factory=dict)
    warnings: Tuple[str, ...] = field(default=(), compare=False)
    _positions: Dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        reviews = tuple(self.reviews)
        positions: Dict[str, int] = {}
        for i, review in enumerate(reviews):
            if review.id in positions:
                raise DataError(f"Duplicate review id {review.id!r}")
            positions[review.id] = i
        object.__setattr__(self, "reviews", reviews)
        object.__setattr__(self, "_positions", positions)
        object.__setattr__(self, "metadata", dict(self.metadata))
        object.__setattr__(self, "warnings", tuple(self.warnings))

        spans = tuple(self.annotations)
        by_sentence: Dict[Tuple[str, str, int], List[AnnotationSpan]] = defaultdict(list)
        for span in spans:
            if span.review_id not in positions:
                raise DataError(f"Span references unknown review {span.review_id!r}")
            review = reviews[positions[span.review_id]]
            if not 0 <= span.sentence_index < len(review.sentences):
                raise DataError(
                    f"Span references missing sentence {span.sentence_index} of review {span.review_id}"
                )
            n = len(review.sentences[span.sentence_index])
            if not 0 <= span.start < span.end <= n:
                raise DataError(
                    f"Span [{span.start},{span.end}) out of range for a {n}-token sentence "
                    f"(review {span.review_id}, sentence {span.sentence_index})"
                )
            by_sentence[(span.annotator, span.review_id, span.sentence_index)].append(span)
        for (annotator, review_id, sentence_index), group in by_sentence.items():
            group.sort(key=lambda s: (s.start, s.end))
            for a, b in zip(group, group[1:]):
                if b.start < a.end:
                    raise DataError(
                        f"Overlapping spans for annotator {annotator!r} in review {review_id}, "
                        f"sentence {sentence_index}: [{a.start},{a.end}) and [{b.start},{b.end})"
                    )
        spans = tuple(sorted(
            spans,
            key=lambda s: (positions[s.review_id], s.sentence_index, s.start, s.end, s.annotator),
        ))
        object.__setattr__(self, "annotations", spans)
        object.__setattr__(
            self, "annotator_ids", frozenset(self.annotator_ids) | {s.annotator for s in spans}
        )

    # ---- lookups ----

    def __len__(self) -> int:
        return len(self.reviews)

    def review(self, review_id: str) -> Review:
        try:
            return self.reviews[self._positions[review_id]]
        except KeyError:
            raise DataError(f"Unknown review id {review_id!r}") from None

    def has_review(self, review_id: str) -> bool:
        return review_id in self._positions

    def sentence(self, review_id: str, sentence_index: int) -> Sentence:
        return self.review(review_id).sentences[sentence_index]

    def span_words(self, span: AnnotationSpan) -> List[str]:
        return self.sentence(span.review_id, span.sentence_index).words[span.start:span.end]

    def span_text(self, span: AnnotationSpan) -> str:
        return " ".join(self.span_words(span))

    def spans_for(self, annotator: str) -> List[AnnotationSpan]:
        self.require_annotator(annotator)
        return [s for s in self.annotations if s.annotator == annotator]

    def require_annotator(self, annotator: str) -> None:
        if annotator not in self.annotator_ids:
            known = ", ".join(sorted(self.annotator_ids)) or "none"
            raise DataError(f"Unknown annotator {annotator!r} (corpus has: {known})")

    def resolve_annotator(self, annotator: Optional[str]) -> str:
        """Return ``annotator`` or, when None, the corpus's only annotator."""
        if annotator is not None:
            self.require_annotator(annotator)
            return annotator
        if len(self.annotator_ids) == 1:
            return next(iter(self.annotator_ids))
        known = ", ".join(sorted(self.annotator_ids)) or "none"
        raise DataError(f"Corpus has annotators [{known}]; name one explicitly")

    def categories(self) -> List[str]:
        return sorted({r.category for r in self.reviews})

    def apps(self) -> List[str]:
        return sorted({r.app for r in self.reviews})

    def category_of(self) -> Dict[str, str]:
        return {r.id: r.category for r in self.reviews}

    @property
    def n_sentences(self) -> int:
        return sum(len(r.sentences) for r in self.reviews)

    @property
    def language(self) -> str:
        return str(self.metadata.get("language", "english"))

    # ---- derived corpora ----

    def replace(self, **changes: Any) -> "Corpus":
        values = {
            "reviews": self.reviews,
            "annotations": self.annotations,
            "annotator_ids": self.annotator_ids,
            "metadata": self.metadata,
            "warnings": self.warnings,
        }
        values.update(changes)
        return Corpus(**values)

    def select_reviews(self, review_ids: Iterable[str]) -> "Corpus":
        keep = set(review_ids)
        return self.replace(
            reviews=tuple(r for r in self.reviews if r.id in keep),
            annotations=tuple(s for s in self.annotations if s.review_id in keep),
        )

    def with_annotations(self, spans: Iterable[AnnotationSpan], keep_annotators: bool = True) -> "Corpus":
        return self.replace(
            annotations=tuple(spans),
            annotator_ids=self.annotator_ids if keep_annotators else frozenset(),
        )

    def project(self, annotator: str) -> "Corpus":
        """Single-annotator view of the corpus."""
        return self.replace(annotations=tuple(self.spans_for(annotator)), annotator_ids=frozenset({annotator}))

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps_jsonl(self).encode("utf-8")).hexdigest()


# ============================================================================
# BIO CONVERSION
# ============================================================================

def bio_decode(labels: Sequence[str]) -> List[Tuple[int, int]]:
    """Maximal B(I)* runs as half-open spans.

    An I at position 0 or directly after O starts a new span, so decoder
    output that violates BIO still decodes.
    """
    spans: List[Tuple[int, int]] = []
    start: Optional[int] = None
    for i, label in enumerate(labels):
        if label == "B" or (label == "I" and start is None):
            if start is not None:
                spans.append((start, i))
            start = i
        elif label != "I":
            if start is not None:
                spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(labels)))
    return spans


def needs_repair(labels: Sequence[str]) -> bool:
    prev = "O"
    for label in labels:
        if label == "I" and prev == "O":
            return True
        prev = label
    return False


def spans_to_labels(n_tokens: int, spans: Iterable[Tuple[int, int]]) -> List[str]:
    labels = ["O"] * n_tokens
    for start, end in spans:
        labels[start] = "B"
        for i in range(start + 1, end):
            labels[i] = "I"
    return labels


def bio_encode(corpus: Corpus, annotator: str) -> List[LabeledSequence]:
    """One BIO sequence per sentence (span-free sentences included)."""
    corpus.require_annotator(annotator)
    by_sentence: Dict[Tuple[str, int], List[Tuple[int, int]]] = defaultdict(list)
    for span in corpus.annotations:
        if span.annotator == annotator:
            by_sentence[(span.review_id, span.sentence_index)].append((span.start, span.end))
    sequences = []
    for review in corpus.reviews:
        for sentence in review.sentences:
            spans = by_sentence.get((review.id, sentence.sentence_index), [])
            sequences.append(LabeledSequence(
                review_id=review.id,
                sentence_index=sentence.sentence_index,
                labels=tuple(spans_to_labels(len(sentence), spans)),
            ))
    return sequences


def training_pairs(corpus: Corpus, annotator: str) -> List[Tuple[Sentence, Tuple[str, ...]]]:
    """(sentence, gold BIO labels) pairs for the tagger."""
    pairs = []
    for seq in bio_encode(corpus, annotator):
        pairs.append((corpus.sentence(seq.review_id, seq.sentence_index), seq.labels))
    return pairs


# ============================================================================
# JSONL FORMAT
# ============================================================================

def _header_record(corpus: Corpus) -> Optional[Dict[str, Any]]:
    if not corpus.metadata and not corpus.annotator_ids:
        return None
    return {
        "metadata": {k: corpus.metadata[k] for k in sorted(corpus.metadata)},
        "annotators": sorted(corpus.annotator_ids),
    }


def _review_record(review: Review, spans: Sequence[AnnotationSpan]) -> Dict[str, Any]:
    return {
        "id": review.id,
        "app": review.app,
        "category": review.category,
        "rating": review.rating,
        "sentences": [
            {"tokens": [{"t": tok.text, "pos": tok.pos} for tok in sentence.tokens]}
            for sentence in review.sentences
        ],
        "annotations": [
            {"annotator": s.annotator, "sentence": s.sentence_index, "start": s.start, "end": s.end}
            for s in sorted(spans, key=lambda s: (s.annotator, s.sentence_index, s.start, s.end))
        ],
    }


def dumps_jsonl(corpus: Corpus) -> str:
    by_review: Dict[str, List[AnnotationSpan]] = defaultdict(list)
    for span in corpus.annotations:
        by_review[span.review_id].append(span)
    lines = []
    header = _header_record(corpus)
    if header is not None:
        lines.append(json.dumps(header, ensure_ascii=False))
    for review in corpus.reviews:
        lines.append(json.dumps(_review_record(review, by_review.get(review.id, [])), ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def _require(record: Mapping[str, Any], key: str, kind: type, path, lineno: int) -> Any:
    if key not in record:
        raise ParseError(path, lineno, f"missing field {key!r}")
    value = record[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(path, lineno, f"field {key!r} must be an integer")
    if kind is not int and not isinstance(value, kind):
        raise ParseError(path, lineno, f"field {key!r} must be of type {kind.__name__}")
    return value


def loads_jsonl(text: str, path: Optional[PathLike] = None) -> Corpus:
    reviews: List[Review] = []
    spans: List[AnnotationSpan] = []
    annotators: set = set()
    metadata: Dict[str, Any] = {}
    warnings: List[str] = []
    fragmented = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(record, dict):
            raise ParseError(path, lineno, "expected a JSON object")
        if "id" not in record and ("metadata" in record or "annotators" in record):
            if reviews:
                raise ParseError(path, lineno, "corpus header must be the first record")
            metadata.update(record.get("metadata") or {})
            annotators.update(record.get("annotators") or [])
            continue
        review_id = str(_require(record, "id", str, path, lineno))
        try:
            sentences = []
            for s_idx, raw_sentence in enumerate(_require(record, "sentences", list, path, lineno)):
                tokens = []
                for t_idx, raw_token in enumerate(raw_sentence.get("tokens", [])):
                    tokens.append(Token(str(raw_token["t"]), raw_token.get("pos"), t_idx))
                sentences.append(Sentence(tuple(tokens), s_idx))
            reviews.append(Review(
                id=review_id,
                app=str(_require(record, "app", str, path, lineno)),
                category=str(_require(record, "category", str, path, lineno)),
                rating=_require(record, "rating", int, path, lineno),
                sentences=tuple(sentences),
            ))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(path, lineno, f"malformed sentence/token structure ({exc})") from None
        except DataError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(path, lineno, str(exc)) from None
        for raw in record.get("annotations", []):
            try:
                annotator = str(raw["annotator"])
                sentence_index = int(raw["sentence"])
                if "tokens" in raw:
                    positions = sorted(int(p) for p in raw["tokens"])
                    if not positions or positions != list(range(positions[0], positions[-1] + 1)):
                        fragmented += 1
                        annotators.add(annotator)
                        continue
                    start, end = positions[0], positions[-1] + 1
                else:
                    start, end = int(raw["start"]), int(raw["end"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(path, lineno, f"malformed annotation ({exc})") from None
            spans.append(AnnotationSpan(annotator, review_id, sentence_index, start, end))
    if fragmented:
        warnings.append(f"dropped {fragmented} non-consecutive annotation(s)")
    return Corpus(
        reviews=tuple(reviews),
        annotations=tuple(spans),
        annotator_ids=frozenset(annotators),
        metadata=metadata,
        warnings=tuple(warnings),
    )


# ============================================================================
# CONLL FORMAT
# ============================================================================

_KV_RE = re.compile(r"(\w+)=(.*?)(?=\s+\w+=|\s*$)")


def _parse_review_header(line: str, path, lineno: int) -> Dict[str, str]:
    fields = {k: v.strip() for k, v in _KV_RE.findall(line[len("#review"):])}
    for key in ("id", "app", "category", "rating"):
        if key not in fields:
            raise ParseError(path, lineno, f"review header lacks {key}=")
    return fields


def dumps_conll(corpus: Corpus) -> str:
    annotators = sorted(corpus.annotator_ids)
    by_key: Dict[Tuple[str, int], Dict[str, List[Tuple[int, int]]]] = defaultdict(lambda: defaultdict(list))
    for span in corpus.annotations:
        by_key[(span.review_id, span.sentence_index)][span.annotator].append((span.start, span.end))
    out: List[str] = []
    header = _header_record(corpus)
    if header is not None:
        out.append("#corpus " + json.dumps(header, ensure_ascii=False))
    for review in corpus.reviews:
        out.append(
            f"#review id={review.id} app={review.app} category={review.category} "
            f"rating={review.rating} annotator={','.join(annotators)}"
        )
        for sentence in review.sentences:
            columns = [
                spans_to_labels(len(sentence), by_key[(review.id, sentence.sentence_index)][a])
                for a in annotators
            ]
            if not sentence.tokens:
                out.append(EMPTY_SENTENCE_MARKER)
            for i, token in enumerate(sentence.tokens):
                row = [token.text, token.pos or "_"] + [col[i] for col in columns]
                out.append("\t".join(row))
            out.append("")
    return "".join(line + "\n" for line in out)


def loads_conll(text: str, path: Optional[PathLike] = None) -> Corpus:
    metadata: Dict[str, Any] = {}
    annotators: set = set()
    reviews: List[Review] = []
    spans: List[AnnotationSpan] = []
    warnings: List[str] = []

    current: Optional[Dict[str, Any]] = None
    rows: List[Tuple[int, List[str]]] = []

    def flush_sentence():
        if not rows or current is None:
            rows.clear()
            return
        s_idx = len(current["sentences"])
        tokens = tuple(
            Token(cols[0], None if cols[1] == "_" else cols[1], i) for i, (_, cols) in enumerate(rows)
        )
        current["sentences"].append(Sentence(tokens, s_idx))
        for a_idx, annotator in enumerate(current["annotators"]):
            labels = [cols[2 + a_idx] for _, cols in rows]
            if needs_repair(labels):
                warnings.append(
                    f"{path or '<input>'}:{rows[0][0]}: repaired I after O for annotator {annotator} "
                    f"(review {current['id']}, sentence {s_idx})"
                )
            for start, end in bio_decode(labels):
                spans.append(AnnotationSpan(annotator, current["id"], s_idx, start, end))
        rows.clear()

    def flush_review():
        flush_sentence()
        if current is not None:
            reviews.append(Review(
                id=current["id"], app=current["app"], category=current["category"],
                rating=current["rating"], sentences=tuple(current["sentences"]),
            ))

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip("\n")
        # Tab-separated lines are always token rows, even for words like "#love".
        head = "" if "\t" in line else (line.split(None, 1) or [""])[0]
        if head == "#corpus":
            try:
                header = json.loads(line[len("#corpus"):].strip() or "{}")
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid corpus header: {exc.msg}") from None
            metadata.update(header.get("metadata") or {})
            annotators.update(header.get("annotators") or [])
            continue
        if head == "#review":
            flush_review()
            fields = _parse_review_header(line, path, lineno)
            try:
                rating = int(fields["rating"])
            except ValueError:
                raise ParseError(path, lineno, f"rating is not an integer: {fields['rating']!r}") from None
            review_annotators = [a for a in fields.get("annotator", "").split(",") if a]
            annotators.update(review_annotators)
            current = {
                "id": fields["id"], "app": fields["app"], "category": fields["category"],
                "rating": rating, "annotators": review_annotators, "sentences": [],
            }
            continue
        if head == EMPTY_SENTENCE_MARKER:
            if current is None:
                raise ParseError(path, lineno, "empty sentence before any #review header")
            flush_sentence()
            current["sentences"].append(Sentence((), len(current["sentences"])))
            continue
        if head.startswith("#"):
            continue
        if not line.strip():
            flush_sentence()
            continue
        if current is None:
            raise ParseError(path, lineno, "token line before any #review header")
        cols = line.split("\t") if "\t" in line else line.split()
        expected = 2 + len(current["annotators"])
        if len(cols) != expected:
            raise ParseError(path, lineno, f"expected {expected} columns, found {len(cols)}")
        for label in cols[2:]:
            if label not in LABELS:
                raise ParseError(path, lineno, f"invalid BIO label {label!r}")
        rows.append((lineno, cols))
    try:
        flush_review()
        return Corpus(
            reviews=tuple(reviews),
            annotations=tuple(spans),
            annotator_ids=frozenset(annotators),
            metadata=metadata,
            warnings=tuple(warnings),
        )
    except ParseError:
        raise
    except DataError as exc:
        raise DataError(f"{path or '<input>'}: {exc}") from None


# ============================================================================
# LOAD / SAVE
# ============================================================================

def infer_format(path: PathLike) -> str:
    suffix = Path(path).suffix.lower()
    return "conll" if suffix in (".conll", ".tsv", ".bio") else "jsonl"


def load_corpus(path: PathLike, format: Optional[str] = None) -> Corpus:
    format = format or infer_format(path)
    if format not in FORMATS:
        raise ConfigError(f"Unknown corpus format {format!r} (expected one of {', '.join(FORMATS)})")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"Corpus file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(path, None, f"not UTF-8 ({exc.reason})") from None
    return loads_conll(text, path) if format == "conll" else loads_jsonl(text, path)


def save_corpus(corpus: Corpus, path: PathLike, format: Optional[str] = None) -> None:
    format = format or infer_format(path)
    if format not in FORMATS:
        raise ConfigError(f"Unknown corpus format {format!r} (expected one of {', '.join(FORMATS)})")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps_conll(corpus) if format == "conll" else dumps_jsonl(corpus)
    path.write_text(text, encoding="utf-8")


# ============================================================================
# STATISTICS
# ============================================================================

@dataclass
class DatasetStats:
    n_reviews: int = 0
    n_sentences: int = 0
    feature_tokens: int = 0
    feature_types: int = 0
    single_word: int = 0
    multi_word: int = 0
    type_token_ratio: float = 0.0
    features_per_review: float = 0.0
    per_category: Dict[str, "DatasetStats"] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        result = {k: v for k, v in asdict(self).items() if k != "per_category"}
        if self.per_category:
            result["per_category"] = {c: s.to_dict() for c, s in sorted(self.per_category.items())}
        return result


def _stats_for(reviews: Sequence[Review], spans: Sequence[AnnotationSpan], corpus: Corpus,
               type_key_fn: Callable[[Sequence[str]], str]) -> DatasetStats:
    n_reviews = len(reviews)
    tokens = len(spans)
    single = sum(1 for s in spans if s.length == 1)
    types = len({type_key_fn(corpus.span_words(s)) for s in spans})
    return DatasetStats(
        n_reviews=n_reviews,
        n_sentences=sum(len(r.sentences) for r in reviews),
        feature_tokens=tokens,
        feature_types=types,
        single_word=single,
        multi_word=tokens - single,
        type_token_ratio=types / tokens if tokens else 0.0,
        features_per_review=tokens / n_reviews if n_reviews else 0.0,
    )


def compute_stats(corpus: Corpus, annotator: Optional[str] = None,
                  type_key_fn: Optional[Callable[[Sequence[str]], str]] = None) -> DatasetStats:
    """Feature statistics, totaled with a per-category breakdown.

    ``annotator`` defaults to the corpus's only annotator; a corpus without
    annotators counts no features.
    """
    if annotator is None and not corpus.annotator_ids:
        spans: List[AnnotationSpan] = []
    else:
        spans = corpus.spans_for(corpus.resolve_annotator(annotator))
    if type_key_fn is None:
        from .evaluation import type_key

        def type_key_fn(words: Sequence[str]) -> str:
            return type_key(words, corpus.language)

    total = _stats_for(corpus.reviews, spans, corpus, type_key_fn)
    for category in corpus.categories():
        reviews = [r for r in corpus.reviews if r.category == category]
        ids = {r.id for r in reviews}
        total.per_category[category] = _stats_for(
            reviews, [s for s in spans if s.review_id in ids], corpus, type_key_fn
        )
    return total


# ============================================================================
# STRATIFIED SAMPLING
# ============================================================================

def apportion(total: int, counts: Mapping[Any, int]) -> Dict[Any, int]:
    """Largest-remainder apportionment of ``total`` by ``counts`` proportions.

    Remainder ties go to the larger stratum, then to the larger key.
    """
    pool = sum(counts.values())
    if pool == 0:
        return {k: 0 for k in counts}
    quotas = {k: total * c // pool for k, c in counts.items()}
    remainders = {k: total * c % pool for k, c in counts.items()}
    missing = total - sum(quotas.values())
    order = sorted(counts, key=lambda k: (-remainders[k], -counts[k], _sort_key(k)))
    for k in order[:missing]:
        quotas[k] += 1
    return quotas


def _sort_key(key: Any) -> Any:
    return (-key) if isinstance(key, (int, float)) else key


def stratified_sample(pool: Corpus, per_app: int, stratum: str = "rating", seed: int = 42) -> Corpus:
    """Sample ``per_app`` reviews per app preserving the pool's stratum mix."""
    if stratum not in STRATA:
        raise ConfigError(f"Unsupported stratum {stratum!r} (expected one of {', '.join(STRATA)})")
    if per_app < 0:
        raise ConfigError("per_app must be non-negative")
    by_app: Dict[str, Dict[int, List[str]]] = defaultdict(lambda: defaultdict(list))
    for review in pool.reviews:
        by_app[review.app][getattr(review, stratum)].append(review.id)
    chosen: set = set()
    for app in sorted(by_app):
        strata = by_app[app]
        size = sum(len(ids) for ids in strata.values())
        if per_app > size:
            raise DataError(f"App {app!r} has {size} reviews in the pool; cannot sample {per_app}")
        quotas = apportion(per_app, {k: len(v) for k, v in strata.items()})
        for value in sorted(strata):
            rng = random.Random(f"{seed}:{app}:{stratum}={value}")
            chosen.update(rng.sample(sorted(strata[value]), quotas[value]))
    return pool.select_reviews(chosen)


# ============================================================================
# FALLBACK POS TAGGER
# ============================================================================

# Closed-class words and a few frequent review adjectives.
CLOSED_CLASS: Dict[str, Tuple[str, ...]] = {
    "DT": ("the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any",
           "no", "another", "all", "both", "either", "neither"),
    "IN": ("in", "on", "at", "of", "for", "with", "from", "by", "about", "into", "over", "after",
           "before", "under", "between", "through", "during", "without", "within", "against",
           "among", "upon", "via", "than", "because", "while", "since", "until", "although",
           "though", "if", "whether", "like", "as"),
    "TO": ("to",),
    "CC": ("and", "or", "but", "nor", "yet", "so", "&"),
    "PRP": ("i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
            "myself", "yourself", "itself", "themselves", "u"),
    "PRP$": ("my", "your", "his", "its", "our", "their"),
    "MD": ("can", "could", "will", "would", "shall", "should", "may", "might", "must", "cannot"),
    "VBZ": ("is", "has", "does", "'s"),
    "VBP": ("are", "am", "have", "do", "'re", "'m", "'ve"),
    "VBD": ("was", "were", "had", "did"),
    "VB": ("be",),
    "VBN": ("been",),
    "VBG": ("being",),
    "RB": ("not", "n't", "very", "too", "also", "just", "really", "never", "always", "still",
           "even", "only", "again", "quite", "now", "ever", "here"),
    "WDT": ("which", "what"),
    "WP": ("who", "whom"),
    "WRB": ("when", "where", "why", "how"),
    "EX": ("there",),
    "UH": ("please", "thanks", "wow", "ok", "okay", "lol", "hi"),
    "JJ": ("good", "great", "bad", "nice", "awesome", "terrible", "new", "old", "best", "better",
           "worse", "worst", "easy", "hard", "slow", "fast", "useless", "cool", "amazing"),
}

ADJECTIVE_SUFFIXES = ("ous", "ful", "able", "ible", "ive", "less", "ish", "ic", "al")

_NUMBER_RE = re.compile(r"^\d+([.,:/]\d+)*$")
_lexicon: Optional[Dict[str, str]] = None


def _pos_lexicon() -> Dict[str, str]:
    global _lexicon
    if _lexicon is None:
        from .settings import load_guideline_data

        lexicon = {word: tag for tag, words in CLOSED_CLASS.items() for word in words}
        for word, tag in (load_guideline_data().get("pos_lexicon") or {}).items():
            lexicon[str(word).lower()] = str(tag)
        _lexicon = lexicon
    return _lexicon


def _suffix_tag(lower: str) -> str:
    if lower.endswith("ing") and len(lower) > 4:
        return "VBG"
    if lower.endswith("ed") and len(lower) > 3:
        return "VBD"
    if lower.endswith("ly") and len(lower) > 3:
        return "RB"
    if len(lower) > 4 and lower.endswith(ADJECTIVE_SUFFIXES):
        return "JJ"
    return "NN"


def guess_pos(word: str, position: int) -> str:
    """Tag one word: punctuation, numbers, lexicon, plural, suffix, proper noun, NN."""
    if not any(ch.isalnum() for ch in word):
        if word == ",":
            return ","
        return "." if word in (".", "!", "?") else ":"
    if _NUMBER_RE.match(word):
        return "CD"
    lower = word.lower()
    lexicon = _pos_lexicon()
    if lower in lexicon:
        return lexicon[lower]
    if (len(lower) > 3 and lower.endswith("s") and not lower.endswith(("ss", "us", "is"))
            and lower[:-1] not in lexicon and _suffix_tag(lower[:-1]) in ("NN", "VBG")):
        return "NNS"
    tag = _suffix_tag(lower)
    if tag == "NN" and position > 0 and word[0].isupper():
        return "NNP"
    return tag


def fallback_pos_tag(sentence: Sentence) -> List[str]:
    """Tags for every token; tokens that already carry a tag keep it."""
    return [tok.pos if tok.pos else guess_pos(tok.text, tok.index) for tok in sentence.tokens]


def tag_sentence(sentence: Sentence) -> Sentence:
    tags = fallback_pos_tag(sentence)
    if all(tok.pos == tag for tok, tag in zip(sentence.tokens, tags)):
        return sentence
    return Sentence(
        tuple(Token(tok.text, tag, tok.index) for tok, tag in zip(sentence.tokens, tags)),
        sentence.sentence_index,
    )


def tag_corpus(corpus: Corpus) -> Corpus:
    """Fill missing POS tags with the fallback tagger."""
    reviews = tuple(
        Review(r.id, r.app, r.category, r.rating, tuple(tag_sentence(s) for s in r.sentences))
        for r in corpus.reviews
    )
    return corpus.replace(reviews=reviews)


def count_untagged(corpus: Corpus) -> int:
    return sum(1 for r in corpus.reviews for s in r.sentences for t in s.tokens if not t.pos)
