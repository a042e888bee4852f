"""SemEval aspect-term XML (laptop/restaurant reviews) as external corpora."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from nltk.tokenize import RegexpTokenizer

from .corpus import AnnotationSpan, Corpus, Review, Sentence, load_corpus, tag_sentence
from .errors import ParseError

SEMEVAL_ANNOTATOR = "semeval"
NEUTRAL_RATING = 3

_tokenizer = RegexpTokenizer(r"\w+(?:[-'’]\w+)*|[^\w\s]")


def tokenize_with_offsets(text: str) -> List[Tuple[str, int, int]]:
    return [(text[start:end], start, end) for start, end in _tokenizer.span_tokenize(text)]


def _offset(element: ET.Element, name: str, path: Path) -> int:
    value = element.get(name)
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ParseError(path, None, f"<{element.tag}> has no integer {name}= attribute (got {value!r})") from None


def _aspect_offsets(sentence: ET.Element, path: Path) -> List[Tuple[int, int, str]]:
    """(from, to, term) of aspectTerm (2014) and Opinion (2015/16) elements."""
    offsets = []
    for term in sentence.iter("aspectTerm"):
        offsets.append((_offset(term, "from", path), _offset(term, "to", path), term.get("term", "")))
    for opinion in sentence.iter("Opinion"):
        target = opinion.get("target")
        if target and target != "NULL":
            offsets.append((_offset(opinion, "from", path), _offset(opinion, "to", path), target))
    return offsets


def load_semeval_xml(path: Union[str, Path], domain: str, language: str = "english") -> Corpus:
    """One single-sentence review per ``<sentence>``; ``app`` and ``category`` are the domain."""
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except FileNotFoundError:
        raise ParseError(path, None, "file not found") from None
    except ET.ParseError as exc:
        raise ParseError(path, exc.position[0], f"invalid XML ({exc})") from None

    reviews: List[Review] = []
    spans: List[AnnotationSpan] = []
    warnings: List[str] = []
    seen: Dict[str, int] = {}
    for position, element in enumerate(root.iter("sentence")):
        text_node = element.find("text")
        text = text_node.text if text_node is not None and text_node.text else ""
        tokens = tokenize_with_offsets(text)
        if not tokens:
            continue
        raw_id = element.get("id") or str(position)
        seen[raw_id] = seen.get(raw_id, 0) + 1
        review_id = f"{domain}-{raw_id}" if seen[raw_id] == 1 else f"{domain}-{raw_id}-{seen[raw_id]}"
        starts = {start: i for i, (_, start, _) in enumerate(tokens)}
        ends = {end: i for i, (_, _, end) in enumerate(tokens)}
        taken: List[Tuple[int, int]] = []
        for char_from, char_to, term in sorted(set(_aspect_offsets(element, path))):
            first, last = starts.get(char_from), ends.get(char_to)
            if first is None or last is None or last < first:
                warnings.append(f"{review_id}: aspect {term!r} [{char_from},{char_to}) does not align with tokens")
                continue
            start, end = first, last + 1
            if (start, end) in taken:
                continue
            if any(start < e and s < end for s, e in taken):
                warnings.append(f"{review_id}: aspect {term!r} overlaps another aspect, dropped")
                continue
            taken.append((start, end))
            spans.append(AnnotationSpan(SEMEVAL_ANNOTATOR, review_id, 0, start, end))
        sentence = tag_sentence(Sentence.from_words([tok for tok, _, _ in tokens]))
        reviews.append(Review(review_id, domain, domain, NEUTRAL_RATING, (sentence,)))

    return Corpus(
        reviews=tuple(reviews),
        annotations=tuple(spans),
        annotator_ids=frozenset({SEMEVAL_ANNOTATOR}),
        metadata={"language": language, "source": "semeval", "domain": domain, "path": path.name},
        warnings=tuple(warnings),
    )


def load_external(path: Union[str, Path], domain: Optional[str] = None, language: str = "english") -> Corpus:
    """SemEval XML by ``.xml`` suffix, otherwise a corpus file (jsonl/conll)."""
    path = Path(path)
    if path.suffix.lower() == ".xml":
        return load_semeval_xml(path, domain or path.stem.lower(), language)
    return load_corpus(path)
