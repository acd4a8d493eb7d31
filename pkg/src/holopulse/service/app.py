"""FastAPI application wrapping the pipeline.

Paths in requests are resolved on the host running the service; the CLI
drives these same endpoints in-process by default. Domain and file errors
surface as HTTP 400 with the underlying message.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, pipeline
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    ExtractRequest,
    ExtractResponse,
    HealthResponse,
    InfoRequest,
    InfoResponse,
    PhantomRequest,
    PhantomResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="holopulse", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/extract", response_model=ExtractResponse)
    def extract(req: ExtractRequest):
        params = pipeline.ExtractParams(
            theta=req.params.theta,
            dilation_radius=req.params.dilation_radius,
            min_len=req.params.min_len,
            half_window=req.params.half_window,
            min_separation=req.params.min_separation,
            smooth_width=req.params.smooth_width,
            norm_spec={name: nm.to_core() for name, nm in req.params.norm.items()},
        )
        summary = _run(
            pipeline.run_extract, req.stack_path, req.vessel_mask_path, req.out_dir, params
        )
        return ExtractResponse(**summary)

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        return EvaluateResponse(**_run(pipeline.run_evaluate, req.pred_path, req.gt_path, req.out_path))

    @app.post("/phantom", response_model=PhantomResponse)
    def phantom(req: PhantomRequest):
        return PhantomResponse(**_run(pipeline.run_phantom, req.spec_path, req.out_dir))

    @app.post("/info", response_model=InfoResponse)
    def info(req: InfoRequest):
        return InfoResponse(**_run(pipeline.run_info, req.path))

    return app


def _run(fn, *args):
    try:
        return fn(*args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
