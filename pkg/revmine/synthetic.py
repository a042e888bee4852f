"""Seeded, template-based synthetic review corpora.

Reviews are assembled from sentence frames with one feature slot. Each
category draws its feature vocabulary from a shared pool (so categories
overlap by ``shared_fraction``) and from its own pool. Self-references,
noun-less spans and long spans are mixed in so that every guideline step
has something to remove. Output is POS-tagged and annotated by ``a1``.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .corpus import AnnotationSpan, Corpus, Review, Sentence
from .errors import ConfigError

Phrase = Tuple[Tuple[str, str], ...]

SLOT = "{F}"


def phrase(text: str) -> Phrase:
    """"photo/NN sharing/NN" -> (("photo", "NN"), ("sharing", "NN"))."""
    return tuple(tuple(item.rsplit("/", 1)) for item in text.split())  # type: ignore[misc]


SHARED_FEATURES = [
    "notifications/NNS", "search/NN", "login/NN", "dark/JJ mode/NN", "push/NN notifications/NNS",
    "settings/NNS", "offline/JJ mode/NN", "sync/NN", "user/NN interface/NN", "updates/NNS",
    "widget/NN", "backup/NN",
]

CATEGORY_FEATURES: Dict[str, List[str]] = {
    "social": [
        "photo/NN sharing/NN", "news/NN feed/NN", "friend/NN requests/NNS", "profile/NN picture/NN",
        "chat/NN", "video/NN", "comments/NNS", "stories/NNS", "share/VB photos/NNS", "boards/NNS",
    ],
    "travel": [
        "hotel/NN booking/NN", "flight/NN search/NN", "maps/NNS", "itinerary/NN", "price/NN alerts/NNS",
        "check-in/NN", "currency/NN converter/NN", "trip/NN planner/NN", "seat/NN selection/NN", "tickets/NNS",
    ],
    "productivity": [
        "calendar/NN", "note/NN editor/NN", "reminders/NNS", "task/NN list/NN", "file/NN upload/NN",
        "tags/NNS", "pdf/NN export/NN", "shared/JJ folders/NNS", "templates/NNS", "spell/NN check/NN",
    ],
    "games": [
        "levels/NNS", "leaderboard/NN", "multiplayer/NN", "sound/NN effects/NNS", "graphics/NNS",
        "achievements/NNS", "in-app/JJ purchases/NNS", "save/NN slots/NNS", "controls/NNS", "tutorial/NN",
    ],
    "music": [
        "playlists/NNS", "equalizer/NN", "lyrics/NNS", "radio/NN", "podcasts/NNS",
        "shuffle/NN", "album/NN art/NN", "downloads/NNS", "audio/NN quality/NN", "sleep/NN timer/NN",
    ],
}

APP_NAMES: Dict[str, List[str]] = {
    "social": ["Pinterest", "Flickr", "Snapchat"],
    "travel": ["TripAdvisor", "Expedia", "Airbnb"],
    "productivity": ["Evernote", "Dropbox", "Trello"],
    "games": ["Minecraft", "Solitaire", "Sudoku"],
    "music": ["Spotify", "Shazam", "Deezer"],
}

EXTERNAL_FEATURES: Dict[str, List[str]] = {
    "laptop": [
        "battery/NN life/NN", "keyboard/NN", "screen/NN", "touchpad/NN", "hard/JJ drive/NN",
        "operating/NN system/NN", "price/NN", "speakers/NNS",
    ],
    "restaurant": [
        "food/NN", "service/NN", "staff/NN", "menu/NN", "wine/NN list/NN", "dessert/NN",
        "atmosphere/NN", "prices/NNS",
    ],
}

NOUNLESS_FEATURES = ["to/TO upload/VB", "to/TO edit/VB", "to/TO scroll/VB", "to/TO share/VB"]

LONG_FEATURES = [
    "sorting/NN functionality/NN in/IN board/NN section/NN",
    "option/NN to/TO export/VB all/DT notes/NNS",
    "button/NN for/IN sharing/VBG photos/NNS",
    "list/NN of/IN recently/RB played/VBN songs/NNS",
]

PSEUDO_FEATURES = ["app/NN", "application/NN"]

FRAMES: Dict[str, List[str]] = {
    "feature": [
        "I/PRP love/VBP the/DT {F} ./.",
        "The/DT {F} is/VBZ great/JJ ./.",
        "Please/UH fix/VB the/DT {F} ./.",
        "The/DT new/JJ {F} keeps/VBZ crashing/VBG !/.",
        "Really/RB like/VB the/DT {F} ./.",
    ],
    "nounless": [
        "I/PRP want/VBP {F} again/RB ./.",
        "Impossible/JJ {F} since/IN yesterday/NN ./.",
    ],
    "pseudo": [
        "This/DT {F} is/VBZ awesome/JJ !/.",
        "Best/JJS {F} ever/RB ./.",
    ],
    "plain": [
        "Five/CD stars/NNS ./.",
        "Works/VBZ fine/RB ./.",
        "Not/RB bad/JJ at/IN all/DT ./.",
    ],
}

DEFAULT_RATING_MIX = {1: 0.1, 2: 0.1, 3: 0.2, 4: 0.3, 5: 0.3}


def fill_frame(frame: str, slot: Optional[Phrase]) -> Tuple[List[str], List[str], Optional[Tuple[int, int]]]:
    """Words, tags and the [start, end) of the slot filler (None for slot-free frames)."""
    words: List[str] = []
    tags: List[str] = []
    span = None
    for item in frame.split():
        if item == SLOT:
            span = (len(words), len(words) + len(slot))
            words.extend(w for w, _ in slot)
            tags.extend(t for _, t in slot)
        else:
            word, tag = item.rsplit("/", 1)
            words.append(word)
            tags.append(tag)
    return words, tags, span


@dataclass(frozen=True)
class SyntheticConfig:
    categories: Tuple[str, ...] = ("social", "travel", "productivity")
    apps_per_category: int = 2
    reviews_per_app: int = 15
    sentences_per_review: Tuple[int, int] = (1, 3)
    shared_fraction: float = 0.3
    rating_mix: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_RATING_MIX))
    pseudo_rate: float = 0.1
    nounless_rate: float = 0.1
    long_rate: float = 0.1
    plain_rate: float = 0.15
    language: str = "english"
    annotator: str = "a1"
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "sentences_per_review", tuple(self.sentences_per_review))
        unknown = [c for c in self.categories if c not in CATEGORY_FEATURES]
        if unknown:
            raise ConfigError(f"Unknown synthetic categories {unknown} (available: {sorted(CATEGORY_FEATURES)})")
        if not 1 <= self.apps_per_category <= min(len(v) for v in APP_NAMES.values()):
            raise ConfigError("apps_per_category must be between 1 and 3")
        if self.reviews_per_app < 0:
            raise ConfigError("reviews_per_app must be >= 0")
        low, high = self.sentences_per_review
        if not 1 <= low <= high:
            raise ConfigError("sentences_per_review must be (min, max) with 1 <= min <= max")
        if not 0.0 <= self.shared_fraction <= 1.0:
            raise ConfigError("shared_fraction must be within [0, 1]")
        if self.pseudo_rate + self.nounless_rate + self.long_rate + self.plain_rate > 1.0:
            raise ConfigError("sentence-kind rates must sum to at most 1")
        if not self.rating_mix or any(r not in range(1, 6) for r in self.rating_mix):
            raise ConfigError("rating_mix keys must be ratings 1..5")

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result["rating_mix"] = {str(k): v for k, v in sorted(self.rating_mix.items())}
        return result


class SyntheticReviewGenerator:
    """Generates annotated reviews from sentence frames."""

    def __init__(self, config: SyntheticConfig):
        self.config = config
        self.rng = random.Random(f"synthetic:{config.seed}")
        n_features = len(next(iter(CATEGORY_FEATURES.values())))
        n_shared = round(config.shared_fraction * n_features)
        shared = sorted(SHARED_FEATURES)
        random.Random(f"shared:{config.seed}").shuffle(shared)
        self.vocabulary: Dict[str, List[Phrase]] = {
            category: [phrase(p) for p in shared[:n_shared] + CATEGORY_FEATURES[category][:n_features - n_shared]]
            for category in config.categories
        }

    def _sentence_kind(self) -> str:
        config = self.config
        roll = self.rng.random()
        for kind, rate in (("pseudo", config.pseudo_rate), ("nounless", config.nounless_rate),
                           ("long", config.long_rate), ("plain", config.plain_rate)):
            if roll < rate:
                return kind
            roll -= rate
        return "feature"

    def _fill(self, kind: str, category: str, app: str) -> Tuple[List[str], List[str], Optional[Tuple[int, int]]]:
        if kind == "plain":
            frame, slot = self.rng.choice(FRAMES["plain"]), None
        elif kind == "pseudo":
            frame = self.rng.choice(FRAMES["pseudo"])
            slot = self.rng.choice([phrase(p) for p in PSEUDO_FEATURES] + [((app, "NNP"),)])
        elif kind == "nounless":
            frame, slot = self.rng.choice(FRAMES["nounless"]), phrase(self.rng.choice(NOUNLESS_FEATURES))
        elif kind == "long":
            frame, slot = self.rng.choice(FRAMES["feature"]), phrase(self.rng.choice(LONG_FEATURES))
        else:
            frame, slot = self.rng.choice(FRAMES["feature"]), self.rng.choice(self.vocabulary[category])
        return fill_frame(frame, slot)

    def generate_review(self, review_id: str, category: str, app: str) -> Tuple[Review, List[AnnotationSpan]]:
        config = self.config
        ratings = sorted(config.rating_mix)
        rating = self.rng.choices(ratings, weights=[config.rating_mix[r] for r in ratings])[0]
        sentences, spans = [], []
        for s_idx in range(self.rng.randint(*config.sentences_per_review)):
            words, tags, span = self._fill(self._sentence_kind(), category, app)
            sentences.append(Sentence.from_words(words, tags, s_idx))
            if span is not None:
                spans.append(AnnotationSpan(config.annotator, review_id, s_idx, *span))
        return Review(review_id, app, category, rating, tuple(sentences)), spans

    def generate_corpus(self) -> Corpus:
        reviews, spans = [], []
        for category in self.config.categories:
            for app in APP_NAMES[category][:self.config.apps_per_category]:
                for j in range(self.config.reviews_per_app):
                    review, review_spans = self.generate_review(f"{app.lower()}-{j:03d}", category, app)
                    reviews.append(review)
                    spans.extend(review_spans)
        return Corpus(
            reviews=tuple(reviews),
            annotations=tuple(spans),
            annotator_ids=frozenset({self.config.annotator}),
            metadata={"language": self.config.language, "source": "synthetic", "seed": self.config.seed},
        )


def generate_corpus(config: Optional[SyntheticConfig] = None) -> Corpus:
    return SyntheticReviewGenerator(config or SyntheticConfig()).generate_corpus()


def generate_external(domain: str = "laptop", n_reviews: int = 200, seed: int = 42,
                      vocabulary: Optional[Sequence[str]] = None, language: str = "english",
                      annotator: str = "semeval") -> Corpus:
    """Single-sentence product reviews shaped like imported SemEval data."""
    if vocabulary is None:
        if domain not in EXTERNAL_FEATURES:
            raise ConfigError(f"Unknown external domain {domain!r} (available: {sorted(EXTERNAL_FEATURES)})")
        vocabulary = EXTERNAL_FEATURES[domain]
    if not vocabulary:
        raise ConfigError("external vocabulary must not be empty")
    phrases = [phrase(p) for p in vocabulary]
    rng = random.Random(f"external:{domain}:{seed}")
    reviews, spans = [], []
    for i in range(n_reviews):
        review_id = f"{domain}-{i:04d}"
        frame = rng.choice(FRAMES["feature"])
        slot = rng.choice(phrases)
        words, tags, span = fill_frame(frame, slot)
        reviews.append(Review(review_id, domain, domain, 3, (Sentence.from_words(words, tags),)))
        spans.append(AnnotationSpan(annotator, review_id, 0, *span))
    return Corpus(
        reviews=tuple(reviews),
        annotations=tuple(spans),
        annotator_ids=frozenset({annotator}),
        metadata={"language": language, "source": "synthetic-external", "domain": domain, "seed": seed},
    )
