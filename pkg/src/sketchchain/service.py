"""Read-only HTTP query service.

The service holds one immutable index snapshot; queries run concurrently
against it and reloading means restarting. Malformed request bodies return
400 with a machine-readable reason; sketches too simple to query return 422.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import EngineConfig
from .errors import EmptyQueryError
from .index import ChainTree
from .model import normalize_frame
from .retrieval import RankedRetrieval, retrieve, sketch_to_chains


class QueryRequest(BaseModel):
    strokes: list[list[tuple[float, float]]] = Field(min_length=1)
    frame: tuple[float, float]
    k: int = Field(default=10, ge=1)
    candidates: Optional[int] = Field(default=None, ge=1)


def _ranked_to_json(ranked: list[RankedRetrieval]) -> dict:
    results = []
    for r in ranked:
        pairs = []
        for pair, gc in zip(r.pairs, r.consistencies):
            pairs.append(
                {
                    "sketch_chain_id": pair.sketch_chain_id,
                    "image_chain_id": pair.image_chain_id,
                    "matched_sketch_points": pair.sketch_points.tolist(),
                    "matched_image_points": pair.image_points.tolist(),
                    "cs": pair.match.score,
                    "gc": gc,
                }
            )
        results.append({"image_id": r.image_id, "score": r.score, "pairs": pairs})
    return {"results": results}


def create_app(tree: ChainTree, cfg: EngineConfig | None = None) -> FastAPI:
    cfg = cfg or tree.config
    app = FastAPI(title="sketchchain", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "malformed_request", "detail": exc.errors()},
        )

    @app.post("/query")
    def query(body: QueryRequest):
        strokes = [normalize_frame(s, body.frame) for s in body.strokes]
        try:
            sketch = sketch_to_chains(strokes, cfg)
        except EmptyQueryError as exc:
            return JSONResponse(
                status_code=422, content={"error": exc.code, "detail": str(exc)}
            )
        ranked = retrieve(
            tree, sketch, k=body.k, target_candidates=body.candidates, cfg=cfg
        )
        return _ranked_to_json(ranked)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", **tree.stats()}

    @app.get("/params")
    def params():
        return cfg.as_dict()

    return app
