"""Protocol conformance of the reference server, via the primary's suite."""
import pytest
from fastapi.testclient import TestClient

from selftrain.classifier import TrainConfig
from selftrain.contract import conformance_fixture, run_conformance
from selftrain.remote import BackendRequestError, RemoteBackend

from bert_backend.server import create_app

FAST_CONFIG = TrainConfig(epochs=2, batch_size=8, learning_rate=1e-3, seed=7)


class AppTransport:
    """Adapts a FastAPI TestClient to the primary's Transport protocol."""

    endpoint = "testclient://bert-backend"

    def __init__(self, client: TestClient):
        self.client = client

    def request(self, method, path, payload=None):
        resp = self.client.request(method, path, json=payload)
        body = resp.json() if resp.content else {}
        return resp.status_code, body


@pytest.fixture
def backend():
    app = create_app(sessions_dir=None)
    with TestClient(app) as client:
        yield RemoteBackend(AppTransport(client)), app


def test_conformance_suite_passes(backend):
    remote, _ = backend
    result = run_conformance(remote, FAST_CONFIG)
    assert set(result.passed) >= {
        "health-schema", "train-rejects-single-class", "train-returns-ready",
        "predict-alignment", "predict-probability-contract", "predict-empty",
    }


def test_predict_before_train_is_conflict(backend):
    remote, _ = backend
    with pytest.raises(BackendRequestError) as exc:
        remote.predict(["anything"])
    assert exc.value.status == 409


def test_single_class_rejected_with_400(backend):
    remote, _ = backend
    fixture = [ex for ex in conformance_fixture() if int(ex.label) == 1]
    with pytest.raises(BackendRequestError) as exc:
        remote.train(fixture, None, FAST_CONFIG)
    assert exc.value.status == 400


def test_busy_session_conflicts(backend):
    remote, app = backend
    state = app.state.backend
    assert state.train_lock.acquire(blocking=False)
    try:
        with pytest.raises(BackendRequestError) as exc:
            remote.train(conformance_fixture(), None, FAST_CONFIG)
        assert exc.value.status == 409
    finally:
        state.train_lock.release()


def test_probability_rows_normalized_and_aligned(backend):
    remote, _ = backend
    remote.train(conformance_fixture(), None, FAST_CONFIG)
    texts = [f"sample text number {i}" for i in range(7)]
    rows = remote.predict(texts)
    assert len(rows) == 7
    for row in rows:
        assert abs(float(row.sum()) - 1.0) <= 1e-6
        assert row.min() >= 0.0

    empty = remote.predict([])
    assert empty == []


def test_unknown_checkpoint_fails_with_reason(backend):
    remote, _ = backend
    with pytest.raises(BackendRequestError, match="cannot load checkpoint"):
        remote_named = RemoteBackend(remote.transport, model_name="no-such-model-xyz")
        remote_named.train(conformance_fixture(), None, FAST_CONFIG)


def test_health_reports_session_state(backend):
    remote, _ = backend
    assert remote.health()["status"] == "idle"
    remote.train(conformance_fixture(), None, FAST_CONFIG)
    assert remote.health()["status"] == "ready"


def test_session_persists_across_restart(tmp_path):
    sessions = tmp_path / "sessions"
    app = create_app(sessions_dir=sessions)
    with TestClient(app) as client:
        remote = RemoteBackend(AppTransport(client))
        remote.train(conformance_fixture(), None, FAST_CONFIG)
        before = remote.predict(["you are kind and warm"])[0]

    restarted = create_app(sessions_dir=sessions)
    with TestClient(restarted) as client:
        remote = RemoteBackend(AppTransport(client))
        assert remote.health()["status"] == "ready"
        after = remote.predict(["you are kind and warm"])[0]
    assert after == pytest.approx(before, abs=1e-6)
