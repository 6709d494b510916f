"""Conformance suite for remote classifier backends.

Any server (or in-process stub) claiming to speak the train/predict
protocol can be checked with ``run_conformance``; each check either
passes or raises ConformanceFailure with the first violation. The
reference stub below implements the protocol in-process, including its
error codes, so the suite itself stays runnable with no server built.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .classifier import TrainConfig
from .corpus import Document, Label, LabeledExample
from .remote import BackendRequestError, RemoteBackend

PREDICT_TEXTS = (
    "you are all wonderful people",
    "i hate everything about this",
    "the weather is fine today",
    "what a stupid idea",
    "see you tomorrow",
)


class ConformanceFailure(AssertionError):
    pass


def conformance_fixture(n_per_class: int = 10) -> list[LabeledExample]:
    """Tiny two-class training fixture used by the conformance checks."""
    nice = ["great", "lovely", "kind", "helpful", "fun", "warm", "nice", "calm", "happy", "good"]
    nasty = ["awful", "hateful", "stupid", "vile", "nasty", "cruel", "dumb", "toxic", "mean", "bad"]
    examples = []
    for i in range(n_per_class):
        examples.append(LabeledExample(
            doc=Document(id=f"neg-{i}", text=f"you are {nice[i % len(nice)]} and {nice[(i + 1) % len(nice)]}"),
            label=Label.NOT_OFFENSIVE))
        examples.append(LabeledExample(
            doc=Document(id=f"pos-{i}", text=f"you are {nasty[i % len(nasty)]} and {nasty[(i + 1) % len(nasty)]}"),
            label=Label.OFFENSIVE))
    return examples


@dataclass
class ConformanceResult:
    passed: list[str]

    def __str__(self) -> str:
        return "\n".join(f"ok {name}" for name in self.passed)


def run_conformance(backend: RemoteBackend, config: TrainConfig | None = None) -> ConformanceResult:
    """Run every protocol check against *backend*; raises on the first failure."""
    config = config or TrainConfig(epochs=2, batch_size=8, seed=7)
    fixture = conformance_fixture()
    passed: list[str] = []

    def check(name: str, condition: bool, detail: str = "") -> None:
        if not condition:
            raise ConformanceFailure(f"{name}: {detail or 'failed'}")
        passed.append(name)

    body = backend.health()
    check("health-schema", isinstance(body.get("status"), str),
          f"health status must be a string, got {body.get('status')!r}")

    single_class = [ex for ex in fixture if ex.label is Label.OFFENSIVE]
    try:
        backend.train(single_class, None, config)
    except BackendRequestError:
        passed.append("train-rejects-single-class")
    else:
        raise ConformanceFailure("train-rejects-single-class: single-class request accepted")

    model = backend.train(fixture, None, config)
    passed.append("train-returns-ready")

    rows = model.predict_proba([Document(id=f"q{i}", text=t) for i, t in enumerate(PREDICT_TEXTS)])
    check("predict-alignment", len(rows) == len(PREDICT_TEXTS),
          f"expected {len(PREDICT_TEXTS)} rows, got {len(rows)}")
    # row validity (normalization within 1e-6, cardinality 2) is enforced
    # by the client on every row; reaching this point means it held
    passed.append("predict-probability-contract")

    empty = backend.predict([])
    check("predict-empty", empty == [], f"empty request returned {empty!r}")

    repeat = backend.predict([PREDICT_TEXTS[0]])
    check("predict-single", len(repeat) == 1, f"got {len(repeat)} rows for one text")

    return ConformanceResult(passed=passed)


class StubBackendTransport:
    """In-process reference implementation of the wire protocol.

    Scores texts by counting tokens seen in each class during "training";
    degenerate but deterministic, with the same status codes a real
    server must use.
    """

    endpoint = "stub://classifier"

    def __init__(self):
        self._token_counts: dict[str, list[int]] | None = None
        self._busy = False

    def request(self, method: str, path: str, payload: dict | None = None) -> tuple[int, dict]:
        if (method, path) == ("GET", "/v1/health"):
            status = "ready" if self._token_counts is not None else "idle"
            return 200, {"status": status}
        if (method, path) == ("POST", "/v1/train"):
            return self._train(payload or {})
        if (method, path) == ("POST", "/v1/predict"):
            return self._predict(payload or {})
        return 404, {"error": f"unknown route {method} {path}"}

    def _train(self, payload: dict) -> tuple[int, dict]:
        if self._busy:
            return 409, {"error": "a training job is already running"}
        examples = list(payload.get("labelled", [])) + list(payload.get("inferred", []))
        labels = {int(ex["label"]) for ex in examples}
        if labels != {0, 1}:
            return 400, {"error": f"training data must contain both classes, got {sorted(labels)}"}
        counts: dict[str, list[int]] = {}
        for ex in examples:
            for token in str(ex["text"]).lower().split():
                counts.setdefault(token, [0, 0])[int(ex["label"])] += 1
        self._token_counts = counts
        return 200, {"status": "ready", "session_id": "stub-1", "seed": 0, "device": "none"}

    def _predict(self, payload: dict) -> tuple[int, dict]:
        if self._token_counts is None:
            return 409, {"error": "no trained model in this session"}
        texts = payload.get("texts")
        if not isinstance(texts, list):
            return 400, {"error": "texts must be a list"}
        probs = []
        for text in texts:
            score = [1.0, 1.0]  # add-one smoothing
            for token in str(text).lower().split():
                if token in self._token_counts:
                    c = self._token_counts[token]
                    score[0] += c[0]
                    score[1] += c[1]
            total = score[0] + score[1]
            probs.append([score[0] / total, score[1] / total])
        return 200, {"probs": probs}


def stub_backend() -> RemoteBackend:
    return RemoteBackend(StubBackendTransport())
