"""FastAPI wiring: routes, error mapping, and the uvicorn entry point."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, DataError, FusionrecError, NumericError
from ..threads import apply_thread_cap
from . import ops, schemas


def _error_payload(exc: FusionrecError) -> tuple[int, dict]:
    if isinstance(exc, ConfigError):
        return 400, {"code": "config", "message": str(exc)}
    if isinstance(exc, DataError):
        return 400, {"code": "data", "message": str(exc)}
    if isinstance(exc, NumericError):
        return 500, {"code": "numeric", "message": str(exc)}
    return 500, {"code": "numeric", "message": str(exc)}


def create_app() -> FastAPI:
    apply_thread_cap()
    app = FastAPI(title="fusionrec",
                  description="Multi-modal movie rating prediction service",
                  version=__version__)

    @app.exception_handler(FusionrecError)
    async def handle_domain_error(request: Request, exc: FusionrecError):
        status, body = _error_payload(exc)
        return JSONResponse(status_code=status, content={"error": body})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(req: schemas.IngestRequest) -> schemas.IngestResponse:
        return ops.do_ingest(req)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
        return ops.do_train(req)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest) -> schemas.EvalResponse:
        return ops.do_eval(req)

    @app.post("/baseline", response_model=schemas.BaselineResponse)
    def baseline(req: schemas.BaselineRequest) -> schemas.BaselineResponse:
        return ops.do_baseline(req)

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        return ops.do_sweep(req)

    return app


app = create_app()


def main() -> None:  # pragma: no cover - manual entry point
    import uvicorn

    uvicorn.run("fusionrec.service.app:app", host="127.0.0.1", port=8351)


if __name__ == "__main__":  # pragma: no cover
    main()
