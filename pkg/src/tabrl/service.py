"""Batch HTTP reward service.

One request scores one rollout group: group-relative rewards are undefined
on single rollouts, so the API shape makes that invariant structural.
"""

from __future__ import annotations

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .engine import (
    RewardEngine,
    UnknownRecordError,
    redacted_config,
    response_to_json,
)


class RolloutIn(BaseModel):
    id: str
    response_text: str
    token_count: int = Field(default=1, ge=1)


class RewardRequestIn(BaseModel):
    group_id: str
    record_id: str
    lambda1: float | None = None
    lambda2: float | None = None
    rollouts: list[RolloutIn] = Field(min_length=1)


def create_app(engine: RewardEngine) -> FastAPI:
    app = FastAPI(title="tabrl reward service")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/config")
    def config():
        return redacted_config(engine.config)

    @app.post("/v1/reward-groups")
    def reward_groups(request: RewardRequestIn):
        try:
            result = engine.score_request(request.model_dump())
        except UnknownRecordError:
            return JSONResponse(status_code=404, content={"error": "unknown record"})
        except Exception as exc:
            # Pathological rollouts must only fail their own group.
            return JSONResponse(status_code=500, content={"error": str(exc)})
        return Response(
            content=response_to_json(result), media_type="application/json"
        )

    return app


def serve(engine: RewardEngine) -> None:
    """Run until signalled; uvicorn drains in-flight requests on shutdown."""
    import uvicorn

    uvicorn.run(
        create_app(engine),
        host=engine.config.bind_host,
        port=engine.config.bind_port,
    )
