"""Linear-chain CRF over B/I/O labels.

Scores are log-linear: a path y over a sentence x scores

    start[y_0] + sum_t state(x_t, y_t) + sum_{t>0} trans[y_{t-1}, y_t]

with ``state(x_t, y) = X[t] @ state_weights[:, y]`` for the sparse feature
row ``X[t]``. All probability arithmetic stays in the log domain
(``scipy.special.logsumexp``). Training minimizes

    sum_s (log Z_s - score(gold_s)) + l2_lambda * ||w||^2

with L-BFGS (``scipy.optimize.minimize``). Decoding masks start->I and O->I.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.optimize import minimize
from scipy.special import logsumexp

from .corpus import LABELS, AnnotationSpan, Corpus, Sentence, bio_decode
from .errors import ConfigError, ModelError, TrainingError
from .features import (
    EmbeddingTable,
    FeatureTemplateConfig,
    build_feature_index,
    featurize_sentence,
    to_matrix,
)
from .logs import print_debug

MODEL_VERSION = "revmine-crf/1"
N_LABELS = len(LABELS)
LABEL_IDS = {label: i for i, label in enumerate(LABELS)}
B, I, O = (LABEL_IDS[label] for label in LABELS)
START = N_LABELS
PREDICTED_ANNOTATOR = "model"


@dataclass(frozen=True)
class TrainConfig:
    l2_lambda: float = 1.0
    max_iterations: int = 200
    convergence_tol: float = 1e-5
    seed: int = 42

    def __post_init__(self):
        if self.l2_lambda < 0:
            raise ConfigError("l2_lambda must be >= 0")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if self.convergence_tol <= 0:
            raise ConfigError("convergence_tol must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrainConfig":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass
class FeaturizedSentence:
    matrix: sparse.csr_matrix
    labels: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.matrix.shape[0]


def label_ids(labels: Sequence[str]) -> np.ndarray:
    return np.array([LABEL_IDS[label] for label in labels], dtype=np.int64)


def pack_weights(state_weights: np.ndarray, transition_weights: np.ndarray) -> np.ndarray:
    return np.concatenate([state_weights.ravel(), transition_weights.ravel()])


def unpack_weights(weights: np.ndarray, n_features: int) -> Tuple[np.ndarray, np.ndarray]:
    split = n_features * N_LABELS
    state = weights[:split].reshape(n_features, N_LABELS)
    transitions = weights[split:].reshape(N_LABELS + 1, N_LABELS)
    return state, transitions


@dataclass
class CrfModel:
    feature_index: Dict[str, int]
    state_weights: np.ndarray
    transition_weights: np.ndarray
    config: FeatureTemplateConfig = field(default_factory=FeatureTemplateConfig)
    labels: Tuple[str, ...] = LABELS
    train_meta: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def zeros(cls, feature_index: Dict[str, int], config: FeatureTemplateConfig, **meta: Any) -> "CrfModel":
        return cls(
            feature_index=feature_index,
            state_weights=np.zeros((len(feature_index), N_LABELS)),
            transition_weights=np.zeros((N_LABELS + 1, N_LABELS)),
            config=config,
            train_meta=dict(meta),
        )

    @property
    def n_features(self) -> int:
        return len(self.feature_index)

    @property
    def weights(self) -> np.ndarray:
        return pack_weights(self.state_weights, self.transition_weights)

    def featurize(self, sentence: Sentence, embeddings: Optional[EmbeddingTable] = None,
                  labels: Optional[Sequence[str]] = None) -> FeaturizedSentence:
        if self.config.use_embeddings and embeddings is None:
            raise ConfigError("model was trained with embedding features; pass the embedding table")
        vectors = featurize_sentence(sentence, self.config, embeddings)
        return FeaturizedSentence(
            to_matrix(vectors, self.feature_index),
            label_ids(labels) if labels is not None else None,
        )

    def emissions(self, sentence: FeaturizedSentence) -> np.ndarray:
        return np.asarray(sentence.matrix @ self.state_weights)

    def score_path(self, sentence: FeaturizedSentence, path: Sequence[Union[int, str]]) -> float:
        ids = [LABEL_IDS[p] if isinstance(p, str) else int(p) for p in path]
        emit = self.emissions(sentence)
        score = self.transition_weights[START, ids[0]] + emit[0, ids[0]]
        for t in range(1, len(ids)):
            score += self.transition_weights[ids[t - 1], ids[t]] + emit[t, ids[t]]
        return float(score)


# ============================================================================
# BATCHED FORWARD-BACKWARD
# ============================================================================

@dataclass
class TrainingBatch:
    """Sentences stacked into one tokens x features matrix plus a padding mask."""

    matrix: sparse.csr_matrix
    labels: np.ndarray
    lengths: np.ndarray
    mask: np.ndarray
    n_features: int

    @classmethod
    def from_sentences(cls, sentences: Sequence[FeaturizedSentence], n_features: int) -> "TrainingBatch":
        sentences = [s for s in sentences if len(s) > 0]
        if not sentences:
            raise TrainingError("no non-empty training sentences")
        lengths = np.array([len(s) for s in sentences], dtype=np.int64)
        mask = np.arange(lengths.max())[None, :] < lengths[:, None]
        matrix = sparse.vstack([s.matrix for s in sentences], format="csr")
        if any(s.labels is None for s in sentences):
            labels = np.zeros(int(lengths.sum()), dtype=np.int64)
        else:
            labels = np.concatenate([s.labels for s in sentences]).astype(np.int64)
        return cls(matrix, labels, lengths, mask, n_features)

    @property
    def first_rows(self) -> np.ndarray:
        return np.cumsum(self.lengths) - self.lengths


def _pad(flat: np.ndarray, mask: np.ndarray) -> np.ndarray:
    padded = np.zeros(mask.shape + (N_LABELS,))
    padded[mask] = flat
    return padded


def _forward_backward(emit: np.ndarray, mask: np.ndarray, transitions: np.ndarray):
    """Log alphas, log betas and log Z for padded emissions of shape (S, T, L)."""
    start, trans = transitions[START], transitions[:START]
    n_sent, n_steps, _ = emit.shape
    alpha = np.empty_like(emit)
    alpha[:, 0] = start + emit[:, 0]
    for t in range(1, n_steps):
        step = logsumexp(alpha[:, t - 1, :, None] + trans[None], axis=1) + emit[:, t]
        alpha[:, t] = np.where(mask[:, t, None], step, alpha[:, t - 1])
    log_z = logsumexp(alpha[:, -1], axis=1)
    beta = np.zeros_like(emit)
    for t in range(n_steps - 2, -1, -1):
        step = logsumexp(trans[None] + (emit[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
        beta[:, t] = np.where(mask[:, t + 1, None], step, 0.0)
    return alpha, beta, log_z


def _pair_marginals(alpha, beta, emit, mask, transitions, log_z) -> np.ndarray:
    trans = transitions[:START]
    log_pair = (
        alpha[:, :-1, :, None]
        + trans[None, None]
        + (emit[:, 1:] + beta[:, 1:])[:, :, None, :]
        - log_z[:, None, None, None]
    )
    return np.exp(log_pair) * mask[:, 1:, None, None]


@dataclass
class ForwardBackwardResult:
    log_z: float
    state_marginals: np.ndarray
    transition_marginals: np.ndarray


def forward_backward(model: CrfModel, sentence: FeaturizedSentence) -> ForwardBackwardResult:
    n = len(sentence)
    if n < 1:
        raise ValueError("forward_backward needs at least one token")
    mask = np.ones((1, n), dtype=bool)
    emit = model.emissions(sentence)[None]
    alpha, beta, log_z = _forward_backward(emit, mask, model.transition_weights)
    state = np.exp(alpha + beta - log_z[:, None, None])[0]
    pairs = _pair_marginals(alpha, beta, emit, mask, model.transition_weights, log_z)[0]
    return ForwardBackwardResult(float(log_z[0]), state, pairs)


def nll_and_gradient(weights: np.ndarray, batch: TrainingBatch, l2_lambda: float) -> Tuple[float, np.ndarray]:
    """Regularized negative conditional log-likelihood and its gradient."""
    state, transitions = unpack_weights(weights, batch.n_features)
    flat = np.asarray(batch.matrix @ state)
    emit = _pad(flat, batch.mask)
    alpha, beta, log_z = _forward_backward(emit, batch.mask, transitions)

    gold = batch.labels
    first = batch.first_rows
    continues = np.ones(len(gold), dtype=bool)
    continues[first] = False
    prev, nxt = gold[:-1][continues[1:]], gold[1:][continues[1:]]
    gold_score = (
        flat[np.arange(len(gold)), gold].sum()
        + transitions[START, gold[first]].sum()
        + transitions[prev, nxt].sum()
    )
    objective = float(log_z.sum() - gold_score + l2_lambda * np.dot(weights, weights))

    marginals = np.exp(alpha + beta - log_z[:, None, None])
    expected = marginals[batch.mask]
    empirical = np.zeros_like(expected)
    empirical[np.arange(len(gold)), gold] = 1.0
    grad_state = np.asarray(batch.matrix.T @ (expected - empirical))

    grad_trans = np.zeros((N_LABELS + 1, N_LABELS))
    grad_trans[START] = marginals[:, 0].sum(axis=0) - np.bincount(gold[first], minlength=N_LABELS)
    pairs = _pair_marginals(alpha, beta, emit, batch.mask, transitions, log_z)
    observed = np.zeros((N_LABELS, N_LABELS))
    np.add.at(observed, (prev, nxt), 1.0)
    grad_trans[:START] = pairs.sum(axis=(0, 1)) - observed

    gradient = pack_weights(grad_state, grad_trans) + 2.0 * l2_lambda * weights
    return objective, gradient


# ============================================================================
# DECODING
# ============================================================================

def viterbi_with_score(model: CrfModel, sentence: FeaturizedSentence) -> Tuple[List[str], float]:
    """Best path under the BIO constraints; ties go to the lower label id (B < I < O)."""
    n = len(sentence)
    if n < 1:
        return [], 0.0
    emit = model.emissions(sentence)
    start = model.transition_weights[START].copy()
    trans = model.transition_weights[:START].copy()
    start[I] = -np.inf
    trans[O, I] = -np.inf
    delta = start + emit[0]
    back = np.zeros((n, N_LABELS), dtype=np.int64)
    for t in range(1, n):
        scores = delta[:, None] + trans
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(N_LABELS)] + emit[t]
    best = int(np.argmax(delta))
    score = float(delta[best])
    path = [best]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return [LABELS[i] for i in path], score


def viterbi(model: CrfModel, sentence: FeaturizedSentence) -> List[str]:
    return viterbi_with_score(model, sentence)[0]


def predict_spans(model: CrfModel, corpus: Corpus,
                  embeddings: Optional[EmbeddingTable] = None) -> List[AnnotationSpan]:
    """featurize -> viterbi -> bio_decode for every sentence of the corpus."""
    spans = []
    for review in corpus.reviews:
        for sentence in review.sentences:
            if len(sentence) == 0:
                continue
            labels = viterbi(model, model.featurize(sentence, embeddings))
            for start, end in bio_decode(labels):
                spans.append(AnnotationSpan(PREDICTED_ANNOTATOR, review.id, sentence.sentence_index, start, end))
    return spans


# ============================================================================
# TRAINING
# ============================================================================

def train(sequences: Sequence[Tuple[Sentence, Sequence[str]]],
          template_config: Optional[FeatureTemplateConfig] = None,
          embeddings: Optional[EmbeddingTable] = None,
          train_config: Optional[TrainConfig] = None,
          progress: Optional[Callable[[int, float], None]] = None) -> CrfModel:
    """Fit a CRF on (sentence, BIO labels) pairs with L-BFGS from zero weights."""
    template_config = template_config or FeatureTemplateConfig()
    train_config = train_config or TrainConfig()
    sequences = [(s, labels) for s, labels in sequences if len(s) > 0]
    if not sequences:
        raise TrainingError("no training data")
    if template_config.use_embeddings and embeddings is None:
        raise ConfigError("feature config enables embeddings but no embedding table was given")

    featurized = [featurize_sentence(s, template_config, embeddings) for s, _ in sequences]
    index = build_feature_index(featurized)
    meta = {
        "n_sequences": len(sequences),
        "n_features": len(index),
        "train_config": train_config.to_dict(),
    }
    if train_config.max_iterations == 0:
        return CrfModel.zeros(
            index, template_config, iterations=0, final_objective=None, converged=False,
            warnings=["max_iterations=0: returning the zero-weight model"], **meta,
        )

    batch = TrainingBatch.from_sentences(
        [FeaturizedSentence(to_matrix(v, index), label_ids(labels))
         for v, (_, labels) in zip(featurized, sequences)],
        len(index),
    )
    history: List[float] = []

    def objective(w: np.ndarray) -> Tuple[float, np.ndarray]:
        value, grad = nll_and_gradient(w, batch, train_config.l2_lambda)
        if not math.isfinite(value) or not np.all(np.isfinite(grad)):
            raise TrainingError("non-finite training objective (check embedding values)")
        return value, grad

    def callback(intermediate_result):
        history.append(float(intermediate_result.fun))
        print_debug(f"iteration {len(history)}: objective {history[-1]:.6f}")
        if progress is not None:
            progress(len(history), history[-1])

    w0 = np.zeros(len(index) * N_LABELS + (N_LABELS + 1) * N_LABELS)
    result = minimize(
        objective,
        w0,
        jac=True,
        method="L-BFGS-B",
        callback=callback,
        options={
            "maxiter": train_config.max_iterations,
            "ftol": train_config.convergence_tol,
            "gtol": 1e-9,
            "maxcor": 10,
        },
    )
    state, transitions = unpack_weights(np.asarray(result.x, dtype=np.float64), len(index))
    return CrfModel(
        feature_index=index,
        state_weights=state.copy(),
        transition_weights=transitions.copy(),
        config=template_config,
        train_meta={
            **meta,
            "iterations": int(result.nit),
            "final_objective": float(result.fun),
            "converged": bool(result.success),
            "message": str(result.message),
            "objective_history": history,
            "warnings": [],
        },
    )


# ============================================================================
# PERSISTENCE
# ============================================================================

def model_to_dict(model: CrfModel) -> Dict[str, Any]:
    features = sorted(model.feature_index, key=model.feature_index.__getitem__)
    return {
        "version": MODEL_VERSION,
        "labels": list(model.labels),
        "config": model.config.to_dict(),
        "train_meta": model.train_meta,
        "features": features,
        "state_weights": [
            [float(v) for v in model.state_weights[model.feature_index[f]]] for f in features
        ],
        "transition_weights": [[float(v) for v in row] for row in model.transition_weights],
    }


def save_model(model: CrfModel, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), ensure_ascii=False) + "\n", encoding="utf-8")


def load_model(path: Union[str, Path]) -> CrfModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ModelError(f"Model file not found: {path}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelError(f"Corrupt model file {path}: {exc}") from None
    if not isinstance(payload, dict):
        raise ModelError(f"Corrupt model file {path}: expected a JSON object")
    version = payload.get("version")
    if version != MODEL_VERSION:
        raise ModelError(f"Unsupported model version {version!r} in {path} (expected {MODEL_VERSION})")
    try:
        if tuple(payload["labels"]) != LABELS:
            raise ModelError(f"Unsupported label set {payload['labels']} in {path}")
        features = list(payload["features"])
        state = np.array(payload["state_weights"], dtype=np.float64).reshape(len(features), N_LABELS)
        transitions = np.array(payload["transition_weights"], dtype=np.float64).reshape(N_LABELS + 1, N_LABELS)
        config = FeatureTemplateConfig.from_dict(payload["config"])
    except ModelError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"Corrupt model file {path}: {exc}") from None
    if not (np.all(np.isfinite(state)) and np.all(np.isfinite(transitions))):
        raise ModelError(f"Corrupt model file {path}: non-finite weights")
    return CrfModel(
        feature_index={f: i for i, f in enumerate(features)},
        state_weights=state,
        transition_weights=transitions,
        config=config,
        train_meta=payload.get("train_meta", {}),
    )
