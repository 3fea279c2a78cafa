"""HTTP scoring service over the render gateway.

Endpoints:
    POST /v1/score        one document, JSON in / JSON out
    POST /v1/score/batch  NDJSON stream in, NDJSON stream out (responses
                          may arrive out of order, matched by request_id)
    GET  /healthz         pool size, sessions alive, queue depth, version

Content-level failures (hangs, navigation errors, empty pages) are scored
responses with zero rewards and render_error set — never HTTP 5xx; only
malformed requests (400), back-pressure (503) and internal faults (500)
surface as HTTP errors.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace

import yaml
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from . import __version__
from .gateway import PIPELINES, RenderGateway
from .rewards import Band, ShapingConfig, load_shaping_config
from .scoring import ScoringConfig, score_html

logger = logging.getLogger(__name__)

DEFAULT_MAX_HTML_BYTES = 2 * 1024 * 1024
RECYCLE_AFTER_FAILURES = 5


@dataclass
class ServiceConfig:
    addr: str = "127.0.0.1:8321"
    pool_size: int = 2
    queue_bound: int = 16
    timeout_ms: int = 15000
    max_html_bytes: int = DEFAULT_MAX_HTML_BYTES
    shaping_path: str | None = None


def load_service_config(path: str | None = None) -> ServiceConfig:
    """Config file (YAML) with environment-variable overrides."""
    path = path or os.environ.get("SLIDESCORE_CONFIG")
    cfg = ServiceConfig()
    if path:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        cfg = replace(cfg, **{k: v for k, v in data.items()
                              if k in ServiceConfig.__dataclass_fields__})
    if os.environ.get("SLIDESCORE_ADDR"):
        cfg.addr = os.environ["SLIDESCORE_ADDR"]
    if os.environ.get("SLIDESCORE_POOL"):
        cfg.pool_size = int(os.environ["SLIDESCORE_POOL"])
    return cfg


class ScoreRequest(BaseModel):
    html: str
    pipeline: str = "full"
    shaping: dict | None = None
    return_overlay: bool = False
    request_id: str = Field(default="")


def shaping_from_dict(data: dict) -> ShapingConfig:
    base = ShapingConfig()

    def band(key, default):
        obj = data.get(key)
        if obj is None:
            return default
        if isinstance(obj, (list, tuple)):
            return Band(float(obj[0]), float(obj[1]))
        return Band(float(obj["lower"]), float(obj["upper"]),
                    bool(obj.get("complement", False)))

    return replace(
        base,
        target=float(data.get("target", base.target)),
        alpha=float(data.get("alpha", base.alpha)),
        beta=float(data.get("beta", base.beta)),
        margin_m=float(data.get("margin_m", base.margin_m)),
        whitespace_band=band("whitespace_band", base.whitespace_band),
        collision_band=band("collision_band", base.collision_band),
        imbalance_band=band("imbalance_band", base.imbalance_band),
    )


@dataclass
class _ServiceState:
    gateway: RenderGateway
    config: ServiceConfig
    scoring: ScoringConfig
    lock: threading.Lock = field(default_factory=threading.Lock)
    in_flight: int = 0
    consecutive_failures: int = 0


def _validate(req: ScoreRequest, state: _ServiceState):
    if not req.html:
        raise HTTPException(400, "html must be non-empty")
    if len(req.html.encode()) > state.config.max_html_bytes:
        raise HTTPException(400, "html exceeds the configured size limit")
    if req.pipeline not in PIPELINES:
        raise HTTPException(400, f"unknown pipeline {req.pipeline!r}")
    if req.shaping is not None:
        try:
            shaping_from_dict(req.shaping)
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(400, f"bad shaping override: {exc}") from exc


def _score_one(state: _ServiceState, req: ScoreRequest) -> dict:
    scoring = state.scoring
    if req.shaping is not None:
        scoring = replace(scoring, shaping=shaping_from_dict(req.shaping))
    result = score_html(
        state.gateway, req.html, config=scoring, pipeline=req.pipeline,
        timeout_ms=state.config.timeout_ms, return_overlay=req.return_overlay)

    failed = result.metric_report.render_error is not None
    with state.lock:
        state.consecutive_failures = state.consecutive_failures + 1 if failed else 0
        recycle = state.consecutive_failures >= RECYCLE_AFTER_FAILURES
        if recycle:
            state.consecutive_failures = 0
    if recycle:
        logger.warning("recycling render sessions after %d consecutive failures",
                       RECYCLE_AFTER_FAILURES)
        state.gateway.pool.recycle()

    response = {"request_id": req.request_id, **result.to_dict()}
    if result.overlay_png is not None:
        response["overlay_png"] = base64.b64encode(result.overlay_png).decode()
    return response


def create_app(config: ServiceConfig | None = None,
               session_factory=None) -> FastAPI:
    config = config or load_service_config()
    shaping = (load_shaping_config(config.shaping_path)
               if config.shaping_path else ShapingConfig())
    gateway = RenderGateway(session_factory=session_factory,
                            pool_size=config.pool_size)
    state = _ServiceState(gateway=gateway, config=config,
                          scoring=ScoringConfig(shaping=shaping))

    @asynccontextmanager
    async def lifespan(_app):
        yield
        gateway.close()

    app = FastAPI(title="slidescore", version=__version__, lifespan=lifespan)
    app.state.score = state

    @app.post("/v1/score")
    def score(req: ScoreRequest) -> dict:
        _validate(req, state)
        with state.lock:
            if state.in_flight >= state.config.queue_bound:
                raise HTTPException(503, "scoring queue is full")
            state.in_flight += 1
        try:
            return _score_one(state, req)
        finally:
            with state.lock:
                state.in_flight -= 1

    @app.post("/v1/score/batch")
    async def score_batch(request: Request) -> StreamingResponse:
        body = (await request.body()).decode()

        def run(line: str) -> dict:
            try:
                req = ScoreRequest.model_validate_json(line)
                _validate(req, state)
            except HTTPException as exc:
                rid = ""
                try:
                    rid = json.loads(line).get("request_id", "")
                except (ValueError, AttributeError):
                    pass
                return {"request_id": rid, "error": exc.detail}
            except ValueError as exc:
                return {"request_id": "", "error": f"malformed record: {exc}"}
            return _score_one(state, req)

        lines = [ln for ln in body.splitlines() if ln.strip()]

        def stream():
            # bounded in-flight concurrency = session-pool size; responses
            # stream as each completes, matched by request_id
            with ThreadPoolExecutor(max_workers=config.pool_size) as pool:
                for result in pool.map(run, lines):
                    yield json.dumps(result) + "\n"

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "version": __version__,
            "pool_size": config.pool_size,
            "sessions_alive": gateway.pool.sessions_alive,
            "queue_depth": state.in_flight,
        }

    return app


def main():
    import uvicorn

    config = load_service_config()
    host, _, port = config.addr.partition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1",
                port=int(port or 8321))


if __name__ == "__main__":
    main()
