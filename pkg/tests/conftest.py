"""Shared fixtures.

``build_corpus`` reads a compact notation: one string per sentence, tokens as
``word/TAG`` (or bare ``word`` for an untagged token) and feature spans in
square brackets, e.g. ``"I/PRP love/VBP [upload/VB video/NN] ./."``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import pytest

from revmine import logs
from revmine.corpus import AnnotationSpan, Corpus, Review, Sentence, load_corpus

FIXTURES = Path(__file__).resolve().parents[1] / "data" / "fixtures"


def parse_sentence(text: str, sentence_index: int = 0) -> Tuple[Sentence, List[Tuple[int, int]]]:
    words, tags, spans = [], [], []
    start = None
    for raw in text.split():
        opens = raw.startswith("[")
        closes = raw.endswith("]")
        raw = raw.strip("[]")
        if opens:
            start = len(words)
        word, _, tag = raw.rpartition("/") if "/" in raw[1:] else (raw, "", "")
        words.append(word)
        tags.append(tag or None)
        if closes:
            spans.append((start, len(words)))
            start = None
    return Sentence.from_words(words, tags, sentence_index), spans


def build_corpus(reviews: Iterable[Sequence], annotator: str = "a1", language: str = "english") -> Corpus:
    """``reviews``: (id, app, category, rating, [sentence strings])."""
    built, annotations = [], []
    for review_id, app, category, rating, texts in reviews:
        sentences = []
        for s_idx, text in enumerate(texts):
            sentence, spans = parse_sentence(text, s_idx)
            sentences.append(sentence)
            annotations.extend(AnnotationSpan(annotator, review_id, s_idx, s, e) for s, e in spans)
        built.append(Review(review_id, app, category, rating, tuple(sentences)))
    return Corpus(
        reviews=tuple(built),
        annotations=tuple(annotations),
        annotator_ids=frozenset({annotator}),
        metadata={"language": language},
    )


@pytest.fixture(autouse=True)
def isolated_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("REVMINE_HISTORY", str(tmp_path / "history.jsonl"))
    monkeypatch.setenv("REVMINE_SETTINGS", str(tmp_path / "settings.json"))
    monkeypatch.setenv("REVMINE_LOG", "quiet")
    logs.set_level(None)
    yield
    logs.set_level(None)


@pytest.fixture
def fixture_path() -> Path:
    return FIXTURES / "reviews.jsonl"


@pytest.fixture
def fixture_corpus(fixture_path) -> Corpus:
    return load_corpus(fixture_path)


@pytest.fixture
def feature_corpus() -> Corpus:
    """Three categories, two reviews each; "video" and "playlist" recur across categories."""
    return build_corpus([
        ("s1", "Pinterest", "social", 5, ["I/PRP love/VBP the/DT [video/NN] ./.",
                                           "Please/UH fix/VB the/DT [playlist/NN] ./."]),
        ("s2", "Pinterest", "social", 2, ["The/DT [video/NN] is/VBZ slow/JJ ./."]),
        ("t1", "Expedia", "travel", 4, ["I/PRP love/VBP the/DT [playlist/NN] ./."]),
        ("t2", "Expedia", "travel", 3, ["Please/UH fix/VB the/DT [video/NN] ./.",
                                         "Nice/JJ colors/NNS ./."]),
        ("e1", "Evernote", "productivity", 5, ["The/DT [playlist/NN] is/VBZ slow/JJ ./."]),
        ("e2", "Evernote", "productivity", 1, ["I/PRP love/VBP the/DT [video/NN] ./."]),
    ])


@pytest.fixture
def make_corpus():
    return build_corpus


@pytest.fixture
def make_sentence():
    return parse_sentence
