"""HTTP server speaking the remote-classifier wire protocol.

    GET  /v1/health                 -> {"status": ...}
    POST /v1/train   {labelled, inferred, config} -> session status
    POST /v1/predict {texts}        -> {"probs": [[p0, p1], ...]}

One training job runs at a time per process; predictions are served
concurrently once the session is ready. Sessions persist to a directory
so a restarted server can keep serving its last fine-tune.
"""
from __future__ import annotations

import argparse
import json
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

import torch
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .models import DEFAULT_MODEL, ModelLoadError, load_model_and_tokenizer
from .training import TrainSettings, finetune, predict_probs


class ExamplePayload(BaseModel):
    text: str
    label: int = Field(ge=0, le=1)


class TrainRequest(BaseModel):
    labelled: list[ExamplePayload] = []
    inferred: list[ExamplePayload] = []
    config: dict = {}


class PredictRequest(BaseModel):
    texts: list[str]


@dataclass
class Session:
    id: str
    model_name: str
    status: str = "idle"  # idle | training | ready | failed
    reason: str | None = None
    seed: int = 0
    device: str = "cpu"
    settings: TrainSettings | None = None
    selected_epoch: int | None = None
    train_loss: float | None = None
    model: object | None = None
    tokenizer: object | None = None

    def manifest(self) -> dict:
        return {
            "session_id": self.id,
            "model": self.model_name,
            "status": self.status,
            "reason": self.reason,
            "seed": self.seed,
            "device": self.device,
            "selected_epoch": self.selected_epoch,
            "train_loss": self.train_loss,
            "config": self.settings.__dict__ if self.settings else None,
        }


class BackendState:
    def __init__(self, sessions_dir: str | Path | None = None):
        self.sessions_dir = Path(sessions_dir) if sessions_dir else None
        self.session = Session(id="none", model_name=DEFAULT_MODEL)
        self.train_lock = threading.Lock()
        if self.sessions_dir:
            self._restore_latest()

    # --- persistence ---------------------------------------------------------

    def _session_dir(self, session: Session) -> Path:
        assert self.sessions_dir is not None
        return self.sessions_dir / session.id

    def save(self, session: Session) -> None:
        if self.sessions_dir is None or session.status != "ready":
            return
        out = self._session_dir(session)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(
            json.dumps(session.manifest(), indent=2, sort_keys=True), encoding="utf-8")
        session.model.save_pretrained(out / "model")
        session.tokenizer.save_pretrained(out / "tokenizer")

    def _restore_latest(self) -> None:
        assert self.sessions_dir is not None
        if not self.sessions_dir.is_dir():
            return
        candidates = sorted((p for p in self.sessions_dir.iterdir()
                             if (p / "manifest.json").is_file()),
                            key=lambda p: p.stat().st_mtime)
        if not candidates:
            return
        latest = candidates[-1]
        try:
            from transformers import AutoModelForSequenceClassification, AutoTokenizer

            manifest = json.loads((latest / "manifest.json").read_text(encoding="utf-8"))
            model = AutoModelForSequenceClassification.from_pretrained(latest / "model")
            tokenizer = AutoTokenizer.from_pretrained(latest / "tokenizer")
            settings = TrainSettings.from_payload(manifest.get("config") or {})
            self.session = Session(
                id=manifest["session_id"], model_name=manifest["model"], status="ready",
                seed=manifest.get("seed", 0), device=manifest.get("device", "cpu"),
                settings=settings, selected_epoch=manifest.get("selected_epoch"),
                train_loss=manifest.get("train_loss"), model=model, tokenizer=tokenizer)
        except Exception:
            # a broken session directory must not take the server down
            self.session = Session(id="none", model_name=DEFAULT_MODEL)


def create_app(sessions_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="bert-backend")
    state = BackendState(sessions_dir)
    app.state.backend = state

    @app.get("/v1/health")
    def health():
        return {"status": state.session.status, "session_id": state.session.id}

    @app.post("/v1/train")
    def train(request: TrainRequest):
        labels = {ex.label for ex in request.labelled} | {ex.label for ex in request.inferred}
        if labels != {0, 1}:
            return JSONResponse(status_code=400, content={
                "error": f"training data must contain both classes, got {sorted(labels)}"})
        if not state.train_lock.acquire(blocking=False):
            return JSONResponse(status_code=409, content={
                "error": "a training job is already running"})
        try:
            settings = TrainSettings.from_payload(request.config)
            device = "cuda" if torch.cuda.is_available() else "cpu"
            session = Session(id=uuid.uuid4().hex[:12], model_name=settings.model,
                              status="training", seed=settings.seed, device=device,
                              settings=settings)
            state.session = session
            texts = [ex.text for ex in request.labelled] + [ex.text for ex in request.inferred]
            try:
                model, tokenizer = load_model_and_tokenizer(
                    settings.model, texts, settings.max_tokens, settings.dropout_rate)
                outcome = finetune(model, tokenizer,
                                   [ex.model_dump() for ex in request.labelled],
                                   [ex.model_dump() for ex in request.inferred],
                                   settings, device=device)
            except (ModelLoadError, RuntimeError, MemoryError) as exc:
                session.status = "failed"
                session.reason = str(exc)
                return {"status": "failed", "reason": session.reason,
                        "session_id": session.id}
            session.model = model
            session.tokenizer = tokenizer
            session.selected_epoch = outcome.selected_epoch
            session.train_loss = outcome.train_loss
            session.status = "ready"
            state.save(session)
            return session.manifest()
        finally:
            state.train_lock.release()

    @app.post("/v1/predict")
    def predict(request: PredictRequest):
        session = state.session
        if session.status != "ready" or session.model is None:
            return JSONResponse(status_code=409, content={
                "error": f"session {session.id} is {session.status}, not ready"})
        settings = session.settings or TrainSettings()
        probs = predict_probs(session.model, session.tokenizer, request.texts,
                              settings.max_tokens, settings.batch_size,
                              device=session.device)
        return {"probs": probs}

    return app


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--sessions-dir", default="sessions")
    args = parser.parse_args()

    import uvicorn

    uvicorn.run(create_app(args.sessions_dir), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
