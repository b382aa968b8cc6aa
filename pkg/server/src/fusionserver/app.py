"""The HTTP surface: /score, /fuse, /healthz.

Requests may arrive concurrently; inference is serialized behind a lock so
responses never interleave model state. Run replicas for throughput.
"""

import os
import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import ServerConfig
from .scoring import CausalScorer, OverLengthError
from .tagging import OverLengthInput, load_tagger


class ScoreRequest(BaseModel):
    texts: list[str]


class FuseRequest(BaseModel):
    text: str = Field(min_length=1)
    beam_size: int = Field(ge=1)


def build_app(config: ServerConfig) -> FastAPI:
    """Load models and wire the endpoints. Fails here, not per request."""
    if not config.fusion_checkpoint:
        raise ValueError("a fusion checkpoint is required to serve /fuse")
    if not os.path.exists(config.fusion_checkpoint):
        raise FileNotFoundError(f"fusion checkpoint not found: {config.fusion_checkpoint}")
    scorer = CausalScorer(config.scorer_model, config.max_length)
    tagger = load_tagger(config.fusion_checkpoint)
    tagger.max_length = config.max_length
    lock = threading.Lock()

    app = FastAPI(title="fusionserver")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/score")
    def score(request: ScoreRequest):
        try:
            with lock:
                scores = scorer.score_batch(request.texts)
        except OverLengthError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"scores": scores}

    @app.post("/fuse")
    def fuse(request: FuseRequest):
        beam_size = min(request.beam_size, config.beam_cap)
        try:
            with lock:
                hypotheses = tagger.fuse(request.text, beam_size)
        except OverLengthInput as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"hypotheses": [{"text": h.text, "score": h.score} for h in hypotheses]}

    return app
