"""Built-in linear classifier trained by SGD on the combined loss.

The loss is the sum of two separately averaged cross-entropy terms, one
over human-labelled examples and one over inferred (weak or augmented)
examples:

    L = (1/n) sum CE(labelled) + (1/m) sum CE(inferred)

with an empty side contributing zero, so a purely supervised run reduces
to plain mean cross-entropy. Training applies linear learning-rate warmup
followed by a constant rate, decoupled weight decay, and input-feature
dropout as the model-noise component; the returned state is the per-epoch
snapshot with the best selection criterion (highest dev F1-macro, or
lowest training loss when no dev set exists).
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document, Label, LabeledExample, Provenance
from .features import FeatureSpace, FeatureVector, featurize_text, stack_features

MODEL_FORMAT_VERSION = 1
PROB_CLAMP = 1e-12

N_CLASSES = 2


class TrainingError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the built-in model and remote backends.

    The learning-rate default (1e-5) targets fine-tuning of pre-trained
    transformers; the built-in randomly initialized linear model barely
    moves at that rate, so ``builtin_defaults`` raises it to 0.1.
    """

    batch_size: int = 128
    max_tokens: int = 128
    learning_rate: float = 1e-5
    warmup_fraction: float = 0.15
    weight_decay: float = 0.001
    epochs: int = 20
    dropout_rate: float = 0.10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "max_tokens": self.max_tokens,
            "learning_rate": self.learning_rate,
            "warmup_fraction": self.warmup_fraction,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "dropout_rate": self.dropout_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        return cls(**{k: obj[k] for k in cls().to_dict() if k in obj})


def builtin_defaults(**overrides) -> TrainConfig:
    """Training defaults for the built-in linear model."""
    return replace(TrainConfig(learning_rate=0.1), **overrides)


@dataclass(frozen=True)
class LossBatch:
    """Inputs of the combined loss: a labelled side and an inferred side."""

    labelled: tuple[tuple[FeatureVector, Label], ...] = ()
    inferred: tuple[tuple[FeatureVector, Label], ...] = ()

    def __post_init__(self) -> None:
        if not self.labelled and not self.inferred:
            raise ValueError("a loss batch needs at least one example")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_f1: float | None = None


@dataclass
class LinearModelState:
    weights: np.ndarray  # (2, dimension)
    bias: np.ndarray  # (2,)
    feature_space: FeatureSpace
    train_config: TrainConfig
    selected_epoch: int = 0
    training_history: list[EpochStats] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.weights.shape != (N_CLASSES, self.feature_space.dimension):
            raise ValueError("weight shape does not match the feature space")

    def predict_proba(self, docs: Sequence[Document]) -> list[np.ndarray]:
        return predict_proba(self, docs)


def check_probability(p: np.ndarray | Sequence[float], tol: float = 1e-9) -> np.ndarray:
    """Validate a binary probability distribution; returns it as an array."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (N_CLASSES,):
        raise ValueError(f"expected {N_CLASSES} probabilities, got shape {arr.shape}")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"probabilities outside [0, 1]: {arr.tolist()}")
    if abs(float(arr.sum()) - 1.0) > tol:
        raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr


def cross_entropy(dist: np.ndarray | Sequence[float], label: Label | int) -> float:
    """Negative log probability of the true class, clamped away from zero."""
    p = float(np.asarray(dist, dtype=np.float64)[int(label)])
    return -math.log(min(max(p, PROB_CLAMP), 1.0))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _side_loss_grad(weights: np.ndarray, bias: np.ndarray,
                    side: Sequence[tuple[FeatureVector, Label]], with_grad: bool):
    """Mean cross-entropy (and gradients) over one side of a loss batch."""
    X = stack_features([fv for fv, _ in side], weights.shape[1])
    y = np.array([int(lbl) for _, lbl in side], dtype=np.int64)
    logits = X @ weights.T + bias
    probs = _softmax(logits)
    p_true = np.clip(probs[np.arange(len(y)), y], PROB_CLAMP, 1.0)
    loss = float(np.mean(-np.log(p_true)))
    if not with_grad:
        return loss, None, None
    dz = probs.copy()
    dz[np.arange(len(y)), y] -= 1.0
    dz /= len(y)
    grad_w = np.asarray((X.T @ dz).T)
    grad_b = dz.sum(axis=0)
    return loss, grad_w, grad_b


def combined_loss(batch: LossBatch, weights: np.ndarray, bias: np.ndarray) -> float:
    """Eq.-style combined loss of a weight matrix on a loss batch."""
    loss = 0.0
    for side in (batch.labelled, batch.inferred):
        if side:
            loss += _side_loss_grad(weights, bias, side, with_grad=False)[0]
    return loss


def combined_loss_grad(batch: LossBatch, weights: np.ndarray,
                       bias: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Combined loss plus its analytic gradient w.r.t. weights and bias."""
    loss = 0.0
    grad_w = np.zeros_like(weights)
    grad_b = np.zeros_like(bias)
    for side in (batch.labelled, batch.inferred):
        if side:
            l, gw, gb = _side_loss_grad(weights, bias, side, with_grad=True)
            loss += l
            grad_w += gw
            grad_b += gb
    return loss, grad_w, grad_b


def train(
    train_examples: Sequence[LabeledExample],
    dev_examples: Sequence[LabeledExample] | None,
    config: TrainConfig,
    space: FeatureSpace,
) -> LinearModelState:
    """SGD over shuffled mini-batches of the combined loss.

    Human-provenance examples feed the labelled term; weak and augmented
    ones feed the inferred term. Deterministic for a fixed seed.
    """
    if not train_examples:
        raise TrainingError("training set is empty")
    classes = {int(ex.label) for ex in train_examples}
    if classes != {0, 1}:
        raise TrainingError(f"training set must contain both classes, found {sorted(classes)}")

    rng = np.random.default_rng(config.seed)
    dim = space.dimension

    vectors = [featurize_text(ex.doc.text, space) for ex in train_examples]
    X = stack_features(vectors, dim).tocsr()
    y = np.array([int(ex.label) for ex in train_examples], dtype=np.int64)
    is_human = np.array([ex.provenance is Provenance.HUMAN for ex in train_examples])

    dev_vectors = None
    dev_y = None
    if dev_examples:
        dev_vectors = stack_features(
            [featurize_text(ex.doc.text, space) for ex in dev_examples], dim)
        dev_y = np.array([int(ex.label) for ex in dev_examples], dtype=np.int64)

    weights = rng.normal(0.0, 0.01, size=(N_CLASSES, dim))
    bias = np.zeros(N_CLASSES)

    n = len(train_examples)
    batches_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * batches_per_epoch
    warmup_steps = int(config.warmup_fraction * total_steps)

    history: list[EpochStats] = []
    best: tuple[float, int, np.ndarray, np.ndarray] | None = None
    step = 0
    keep = 1.0 - config.dropout_rate

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = order[start : start + config.batch_size]
            Xb = X[rows]
            if config.dropout_rate > 0.0:
                Xb = Xb.copy()
                mask = rng.random(Xb.data.shape) < keep
                Xb.data = np.where(mask, Xb.data / keep, 0.0)
            yb = y[rows]
            hb = is_human[rows]

            probs = _softmax(Xb @ weights.T + bias)
            dz = probs
            dz[np.arange(len(yb)), yb] -= 1.0
            scale = np.zeros(len(yb))
            n_lab = int(hb.sum())
            n_inf = len(yb) - n_lab
            if n_lab:
                scale[hb] = 1.0 / n_lab
            if n_inf:
                scale[~hb] = 1.0 / n_inf
            dz *= scale[:, None]
            grad_w = np.asarray((Xb.T @ dz).T)
            grad_b = dz.sum(axis=0)

            lr = config.learning_rate
            if warmup_steps > 0 and step < warmup_steps:
                lr *= (step + 1) / warmup_steps
            weights -= lr * grad_w
            bias -= lr * grad_b
            if config.weight_decay > 0.0:
                weights *= 1.0 - lr * config.weight_decay
            step += 1

        train_loss = _full_loss(weights, bias, X, y, is_human)
        dev_f1 = None
        if dev_vectors is not None:
            dev_f1 = _f1_on(weights, bias, dev_vectors, dev_y)
        history.append(EpochStats(epoch=epoch, train_loss=train_loss, dev_f1=dev_f1))

        criterion = dev_f1 if dev_vectors is not None else -train_loss
        if best is None or criterion > best[0]:
            best = (criterion, epoch, weights.copy(), bias.copy())

    assert best is not None
    _, selected_epoch, best_w, best_b = best
    return LinearModelState(
        weights=best_w,
        bias=best_b,
        feature_space=space,
        train_config=config,
        selected_epoch=selected_epoch,
        training_history=history,
    )


def _full_loss(weights, bias, X, y, is_human) -> float:
    """Combined loss over the whole training set, dropout disabled."""
    probs = _softmax(X @ weights.T + bias)
    p_true = np.clip(probs[np.arange(len(y)), y], PROB_CLAMP, 1.0)
    ce = -np.log(p_true)
    loss = 0.0
    if is_human.any():
        loss += float(ce[is_human].mean())
    if (~is_human).any():
        loss += float(ce[~is_human].mean())
    return loss


def _f1_on(weights, bias, X, y) -> float:
    from .metrics import confusion, f1_macro

    logits = X @ weights.T + bias
    preds = (logits[:, 1] > logits[:, 0]).astype(np.int64)
    return f1_macro(confusion(preds.tolist(), y.tolist()))


def predict_proba(model: LinearModelState, docs: Sequence[Document]) -> list[np.ndarray]:
    """Softmax class probabilities per document; dropout disabled."""
    if not docs:
        return []
    X = stack_features([featurize_text(d.text, model.feature_space) for d in docs],
                       model.feature_space.dimension)
    probs = _softmax(X @ model.weights.T + model.bias)
    return [probs[i] for i in range(probs.shape[0])]


def predict_label(dist: np.ndarray) -> Label:
    """Argmax label; exact ties go to the lower class index (NOT_OFFENSIVE)."""
    return Label.OFFENSIVE if float(dist[1]) > float(dist[0]) else Label.NOT_OFFENSIVE


# --- persistence -------------------------------------------------------------


def _encode_array(arr: np.ndarray) -> dict:
    contiguous = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(contiguous.shape),
        "dtype": "float64",
        "data": base64.b64encode(contiguous.tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype=np.float64).reshape(obj["shape"]).copy()


def save_model(model: LinearModelState, path: str | Path) -> None:
    """Write a self-describing JSON container; weights round-trip bit-exact."""
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "weights": _encode_array(model.weights),
        "bias": _encode_array(model.bias),
        "feature_space": model.feature_space.to_dict(),
        "train_config": model.train_config.to_dict(),
        "selected_epoch": model.selected_epoch,
        "training_history": [
            {"epoch": h.epoch, "train_loss": h.train_loss, "dev_f1": h.dev_f1}
            for h in model.training_history
        ],
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> LinearModelState:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    version = obj.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise TrainingError(f"unsupported model format version: {version!r}")
    return LinearModelState(
        weights=_decode_array(obj["weights"]),
        bias=_decode_array(obj["bias"]),
        feature_space=FeatureSpace.from_dict(obj["feature_space"]),
        train_config=TrainConfig.from_dict(obj["train_config"]),
        selected_epoch=int(obj["selected_epoch"]),
        training_history=[
            EpochStats(epoch=h["epoch"], train_loss=h["train_loss"], dev_f1=h.get("dev_f1"))
            for h in obj["training_history"]
        ],
    )
