"""Feature templates for the CRF tagger and the word-embedding table.

Per token the templates emit words and POS tags in a window around it,
one-to-four character prefixes and suffixes, the position in the sentence,
stylistic flags and (optionally) the token's embedding vector.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .corpus import Sentence
from .errors import ConfigError, ParseError

PAD = "<PAD>"
NO_POS = "<NONE>"
AFFIX_LENGTHS = (1, 2, 3, 4)


@dataclass(frozen=True)
class FeatureTemplateConfig:
    window: int = 2
    affix_lengths: Tuple[int, ...] = AFFIX_LENGTHS
    use_pos: bool = True
    use_position: bool = True
    use_stylistics: bool = True
    use_embeddings: bool = False
    embedding_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "affix_lengths", tuple(sorted(set(self.affix_lengths))))
        if self.window < 0:
            raise ConfigError("window must be >= 0")
        if not set(self.affix_lengths) <= set(AFFIX_LENGTHS):
            raise ConfigError(f"affix_lengths must be a subset of {set(AFFIX_LENGTHS)}")
        if self.use_embeddings and self.embedding_dim <= 0:
            raise ConfigError("embedding_dim must be positive when use_embeddings is set")

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result["affix_lengths"] = list(self.affix_lengths)
        return result

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeatureTemplateConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        if "affix_lengths" in known:
            known["affix_lengths"] = tuple(known["affix_lengths"])
        return cls(**known)


@dataclass(frozen=True)
class FeatureVector:
    binary_features: FrozenSet[str]
    continuous_features: Mapping[str, float] = field(default_factory=dict)


@dataclass
class EmbeddingTable:
    dim: int
    vectors: Dict[str, np.ndarray] = field(default_factory=dict)
    lowercase_lookup: bool = True
    warnings: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.vectors)

    def lookup(self, word: str) -> Optional[np.ndarray]:
        if self.lowercase_lookup:
            hit = self.vectors.get(word.lower())
            if hit is not None:
                return hit
        return self.vectors.get(word)

    def fingerprint(self) -> Dict[str, Any]:
        return {"dim": self.dim, "size": len(self.vectors), "lowercase_lookup": self.lowercase_lookup}


def load_embeddings(path: Union[str, Path], lowercase_lookup: bool = True) -> EmbeddingTable:
    """Whitespace-separated ``word v1 ... vD`` lines with an optional ``N D`` header."""
    path = Path(path)
    dim: Optional[int] = None
    vectors: Dict[str, np.ndarray] = {}
    warnings: List[str] = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ParseError(path, None, "embeddings file not found") from None
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            dim = int(parts[1])
            continue
        word, raw = parts[0], parts[1:]
        if dim is None:
            dim = len(raw)
            if dim == 0:
                raise ParseError(path, lineno, f"no vector values for {word!r}")
        if len(raw) != dim:
            raise ParseError(path, lineno, f"expected {dim} values for {word!r}, found {len(raw)}")
        try:
            vector = np.array([float(v) for v in raw], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(path, lineno, f"non-numeric value ({exc})") from None
        if not np.all(np.isfinite(vector)):
            raise ParseError(path, lineno, f"non-finite value in vector for {word!r}")
        if word in vectors:
            warnings.append(f"{path}:{lineno}: duplicate word {word!r}, keeping the last vector")
        vectors[word] = vector
    return EmbeddingTable(dim=dim or 0, vectors=vectors, lowercase_lookup=lowercase_lookup, warnings=warnings)


def _offset(o: int) -> str:
    return f"+{o}" if o > 0 else str(o)


def stylistics(word: str) -> List[str]:
    flags = []
    if word[0].isupper():
        flags.append("init_cap")
    if len(word) > 1 and word.isupper():
        flags.append("all_caps")
    if any(ch.isdigit() for ch in word):
        flags.append("has_digit")
    if any(not ch.isalnum() for ch in word):
        flags.append("has_symbol")
    if any(ch.isalpha() for ch in word) and any(ch.isdigit() for ch in word):
        flags.append("alnum")
    return flags


def extract_features(sentence: Sentence, t: int, config: FeatureTemplateConfig,
                     embeddings: Optional[EmbeddingTable] = None) -> FeatureVector:
    n = len(sentence)
    if not 0 <= t < n:
        raise IndexError(f"token index {t} outside a {n}-token sentence")
    tokens = sentence.tokens
    binary = set()
    for o in range(-config.window, config.window + 1):
        i = t + o
        inside = 0 <= i < n
        binary.add(f"w[{_offset(o)}]={tokens[i].text.lower() if inside else PAD}")
        if config.use_pos:
            binary.add(f"pos[{_offset(o)}]={(tokens[i].pos or NO_POS) if inside else PAD}")

    word = tokens[t].text
    lower = word.lower()
    for k in config.affix_lengths:
        if k > len(lower):
            break
        binary.add(f"pre{k}[0]={lower[:k]}")
        binary.add(f"suf{k}[0]={lower[-k:]}")
    if config.use_position:
        where = "first" if t == 0 else ("last" if t == n - 1 else "inner")
        binary.add(f"pos_in_sent={where}")
    if config.use_stylistics:
        binary.update(f"style[0]={flag}" for flag in stylistics(word))

    continuous: Dict[str, float] = {}
    if config.use_embeddings:
        vector = embeddings.lookup(word) if embeddings is not None else None
        for d in range(config.embedding_dim):
            value = float(vector[d]) if vector is not None and d < len(vector) else 0.0
            continuous[f"emb[{d}]"] = value
    return FeatureVector(frozenset(binary), continuous)


def featurize_sentence(sentence: Sentence, config: FeatureTemplateConfig,
                       embeddings: Optional[EmbeddingTable] = None) -> List[FeatureVector]:
    if config.use_embeddings and embeddings is not None and embeddings.dim != config.embedding_dim:
        raise ConfigError(
            f"embedding table has dim {embeddings.dim}, feature config expects {config.embedding_dim}"
        )
    return [extract_features(sentence, t, config, embeddings) for t in range(len(sentence))]


def build_feature_index(featurized: Sequence[Sequence[FeatureVector]]) -> Dict[str, int]:
    """Sorted feature ids -> column, so the index is independent of data order."""
    ids = set()
    for vectors in featurized:
        for vector in vectors:
            ids.update(vector.binary_features)
            ids.update(vector.continuous_features)
    return {fid: col for col, fid in enumerate(sorted(ids))}


def to_matrix(vectors: Sequence[FeatureVector], feature_index: Mapping[str, int]) -> sparse.csr_matrix:
    """Tokens x features CSR matrix; ids missing from the index are dropped."""
    rows, cols, vals = [], [], []
    for r, vector in enumerate(vectors):
        for fid in vector.binary_features:
            col = feature_index.get(fid)
            if col is not None:
                rows.append(r)
                cols.append(col)
                vals.append(1.0)
        for fid, value in vector.continuous_features.items():
            col = feature_index.get(fid)
            if col is not None and value != 0.0:
                if not math.isfinite(value):
                    raise ConfigError(f"non-finite continuous feature {fid}={value}")
                rows.append(r)
                cols.append(col)
                vals.append(value)
    matrix = sparse.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(vectors), len(feature_index)),
    )
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix
