"""HTTP service: ``uvicorn wl1recovery.api:app``."""

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response

from . import __version__, service
from .ensemble import RNG_ALGORITHM
from .harness import SweepConfig
from .linalg import SingularMatrixError
from .oracle import OracleError
from .solver import StepSizeError

app = FastAPI(title="wl1recovery", version=__version__)

NUMERICAL_ERRORS = (SingularMatrixError, StepSizeError, OracleError)


def _call(handler, *args):
    try:
        return handler(*args)
    except NUMERICAL_ERRORS as exc:
        raise HTTPException(status_code=500, detail=f"numerical error: {exc}") from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__, "rng": RNG_ALGORITHM}


@app.post("/solve", response_model=service.SolveResponse)
def solve(req: service.SolveRequest):
    return _call(service.handle_solve, req)


@app.post("/check", response_model=service.CertificateResponse)
def check(req: service.ProblemRequest):
    return _call(service.handle_check, req)


@app.post("/oracle", response_model=service.OracleResponse)
def oracle(req: service.ProblemRequest):
    return _call(service.handle_oracle, req)


@app.post("/predict", response_model=service.PredictResponse)
def predict(req: service.PredictRequest):
    return _call(service.handle_predict, req)


@app.post("/sweep", response_model=service.SweepResponse)
def sweep(cfg: SweepConfig):
    return _call(service.handle_sweep, cfg)


@app.post("/plot")
def plot(req: service.PlotRequest):
    return Response(content=_call(service.handle_plot, req), media_type="image/svg+xml")
