"""Client for remote classifier backends speaking the train/predict protocol.

The wire format is JSON over HTTP:

    GET  /v1/health                  -> {"status": ...}
    POST /v1/train   {"labelled": [{"text","label"}], "inferred": [...],
                      "config": {...}}          -> {"status": "ready", ...}
    POST /v1/predict {"texts": [...]}           -> {"probs": [[p0, p1], ...]}

Responses are validated against the probability invariants before they
reach the rest of the pipeline; anything out of contract surfaces as a
ProtocolError rather than silently flowing on. Transports are pluggable
so the same client runs against a live server or an in-process stub.
"""
from __future__ import annotations

import json
from typing import Protocol, Sequence

import numpy as np

from .classifier import TrainConfig, check_probability
from .corpus import Document, LabeledExample, Provenance

PROB_SUM_TOL = 1e-6


class BackendError(Exception):
    """Base class for remote-backend failures."""


class BackendConnectionError(BackendError):
    """The endpoint could not be reached."""


class BackendRequestError(BackendError):
    """The backend rejected the request (validation, busy, not ready)."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ProtocolError(BackendError):
    """The backend answered outside the wire contract."""


class Transport(Protocol):
    """Minimal request primitive: (method, path, payload) -> (status, body)."""

    endpoint: str

    def request(self, method: str, path: str, payload: dict | None = None) -> tuple[int, dict]:
        ...


class HttpTransport:
    def __init__(self, base_url: str, timeout: float = 600.0):
        self.endpoint = base_url.rstrip("/")
        self.timeout = timeout

    def request(self, method: str, path: str, payload: dict | None = None) -> tuple[int, dict]:
        import requests

        url = f"{self.endpoint}{path}"
        try:
            resp = requests.request(method, url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendConnectionError(f"backend {self.endpoint} unreachable: {exc}") from exc
        try:
            body = resp.json() if resp.content else {}
        except json.JSONDecodeError:
            raise ProtocolError(f"backend {self.endpoint} returned non-JSON for {path}") from None
        if not isinstance(body, dict):
            raise ProtocolError(f"backend {self.endpoint} returned a non-object for {path}")
        return resp.status_code, body


class RemoteModel:
    """Handle to the model currently served by a backend session."""

    def __init__(self, backend: "RemoteBackend", session_id: str | None = None):
        self._backend = backend
        self.session_id = session_id

    def predict_proba(self, docs: Sequence[Document]) -> list[np.ndarray]:
        return self._backend.predict([d.text for d in docs])


class RemoteBackend:
    """Remote counterpart of the built-in backend.

    ``train`` is never retried (it mutates server state); ``predict`` is
    idempotent and may be retried by callers.
    """

    name = "remote"

    def __init__(self, transport: Transport | str, model_name: str | None = None):
        self.transport = HttpTransport(transport) if isinstance(transport, str) else transport
        self.model_name = model_name

    @property
    def endpoint(self) -> str:
        return self.transport.endpoint

    def _raise_for_status(self, status: int, body: dict, context: str) -> None:
        if status == 200 and body.get("status") != "failed":
            return
        reason = body.get("reason") or body.get("error") or body.get("detail") or str(body)
        if status == 200:
            raise BackendRequestError(f"{context} failed on {self.endpoint}: {reason}", status)
        raise BackendRequestError(
            f"{context} rejected by {self.endpoint} (HTTP {status}): {reason}", status)

    def health(self) -> dict:
        status, body = self.transport.request("GET", "/v1/health")
        if status != 200:
            raise BackendRequestError(
                f"health check failed on {self.endpoint} (HTTP {status})", status)
        if "status" not in body:
            raise ProtocolError(f"health response from {self.endpoint} lacks a status field")
        return body

    def train(self, train_examples: Sequence[LabeledExample],
              dev_examples: Sequence[LabeledExample] | None,
              config: TrainConfig) -> RemoteModel:
        labelled = [{"text": ex.doc.text, "label": int(ex.label)}
                    for ex in train_examples if ex.provenance is Provenance.HUMAN]
        inferred = [{"text": ex.doc.text, "label": int(ex.label)}
                    for ex in train_examples if ex.provenance is not Provenance.HUMAN]
        payload: dict = {"labelled": labelled, "inferred": inferred, "config": config.to_dict()}
        if self.model_name:
            payload["config"]["model"] = self.model_name
        status, body = self.transport.request("POST", "/v1/train", payload)
        self._raise_for_status(status, body, "training")
        return RemoteModel(self, body.get("session_id"))

    def predict(self, texts: Sequence[str]) -> list[np.ndarray]:
        status, body = self.transport.request("POST", "/v1/predict", {"texts": list(texts)})
        self._raise_for_status(status, body, "prediction")
        if "probs" not in body or not isinstance(body["probs"], list):
            raise ProtocolError(f"predict response from {self.endpoint} lacks a probs list")
        rows = body["probs"]
        if len(rows) != len(texts):
            raise ProtocolError(
                f"predict response from {self.endpoint} misaligned: "
                f"{len(texts)} texts but {len(rows)} rows")
        out = []
        for i, row in enumerate(rows):
            try:
                out.append(check_probability(row, tol=PROB_SUM_TOL))
            except ValueError as exc:
                raise ProtocolError(
                    f"predict row {i} from {self.endpoint} violates the "
                    f"probability contract: {exc}") from None
        return out


def remote_train(endpoint: Transport | str, train_examples: Sequence[LabeledExample],
                 dev_examples: Sequence[LabeledExample] | None,
                 config: TrainConfig) -> RemoteModel:
    """Train on a remote backend; same contract as the local ``train``."""
    return RemoteBackend(endpoint).train(train_examples, dev_examples, config)


def remote_predict(endpoint: Transport | str, docs: Sequence[Document]) -> list[np.ndarray]:
    """Predict through a remote backend; same contract as ``predict_proba``."""
    return RemoteBackend(endpoint).predict([d.text for d in docs])
