"""Request/response models and handlers shared by the HTTP API and the CLI."""

import math
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from . import __version__
from .ensemble import RNG_ALGORITHM, ProblemInstance
from .harness import CSV_FIELDS, SweepConfig, SweepRecord, load_weight_list, records_to_dicts, render_svg, run_sweep
from .oracle import MAX_N, brute_force_minimum
from .solver import SolverConfig, as_weights, solve_weighted_l1, strict_dual_feasibility
from .theory import (check_recovery_events, eta_of, gap, rescaled_theta, sample_threshold, select_h,
                     tuned_threshold)


class RequestError(ValueError):
    """Invalid request content (maps to HTTP 422 and CLI exit code 1)."""


class ProblemRequest(BaseModel):
    problem: Dict[str, Any]
    weights: Union[str, List[float]] = "uniform:1.0"
    h: Union[float, str] = "auto"
    phi_n: float = Field(9.0, ge=2)


class SolveRequest(ProblemRequest):
    tol_kkt: float = Field(1e-9, gt=0)
    max_iters: int = Field(50_000, ge=0)
    step_rule: str = "backtracking"


class SolveResponse(BaseModel):
    x_hat: List[float]
    support: List[int]
    kkt_residual: float
    iterations: int
    objective: float
    converged: bool
    h: float
    dual_margin: float
    unique: bool


class CertificateResponse(BaseModel):
    event1_holds: bool
    event1_margin: float
    event2_holds: bool
    x_dagger: List[float]
    h: float


class OracleResponse(BaseModel):
    x_opt: List[float]
    support: List[int]
    signs: List[int]
    dual_margin: float
    unique: bool
    candidates: int
    h: float


class PredictRequest(BaseModel):
    n: int = Field(gt=1)
    k: int = Field(ge=1)
    eta: float = Field(1.0, gt=0)
    sigma_z: float = Field(0.5, gt=0)
    sigma_a: float = Field(1.0, gt=0)
    phi_n: float = Field(9.0, ge=2)
    m: int = Field(ge=1)
    epsilon_prime: float = Field(0.0, ge=0)
    c3: float = Field(1.0, gt=0)
    support_weight: Optional[float] = Field(None, gt=0)


class PredictResponse(BaseModel):
    h: float
    m_star: float
    theta_m_star: float
    m_star_tuned: float
    theta_m_star_tuned: float
    gap: float
    theta_m: float


class SweepResponse(BaseModel):
    records: List[Dict[str, Any]]
    csv_fields: List[str] = list(CSV_FIELDS)
    rng: str = RNG_ALGORITHM
    version: str = __version__


class PlotRequest(BaseModel):
    records: List[Dict[str, Any]] = Field(min_length=1)
    x: str = "theta"


def load_problem(doc):
    try:
        return ProblemInstance.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise RequestError(f"invalid problem document: {exc}") from exc


def resolve_weights(spec, inst):
    """Weights from ``uniform:c``, ``support:c``, a file path, or a list.

    ``support:c`` puts weight c on the instance's true support and 1
    elsewhere.
    """
    n = inst.n
    try:
        if isinstance(spec, list):
            return as_weights(spec, n)
        if spec.startswith("uniform:"):
            return as_weights(np.full(n, float(spec.split(":", 1)[1])), n)
        if spec == "uniform":
            return np.ones(n)
        if spec.startswith("support:"):
            w = np.ones(n)
            w[inst.signal.support] = float(spec.split(":", 1)[1])
            return as_weights(w, n)
        return as_weights(load_weight_list(spec), n)
    except OSError as exc:
        raise RequestError(f"cannot read weights: {exc}") from exc
    except ValueError as exc:
        raise RequestError(f"invalid weights {spec!r}: {exc}") from exc


def resolve_h(h, inst, w, phi_n):
    if isinstance(h, str):
        if h != "auto":
            try:
                h = float(h)
            except ValueError:
                raise RequestError(f"h must be a number or 'auto', got {h!r}") from None
        else:
            c = inst.config
            if inst.signal.k == 0 or inst.signal.k >= inst.n:
                raise RequestError("h=auto needs 0 < k < n")
            try:
                return select_h(inst.m, inst.n, inst.signal.k, eta_of(w, inst.signal.support),
                                c.sigma_z, c.sigma_a, phi_n)
            except ValueError as exc:
                raise RequestError(str(exc)) from exc
    if not (h > 0 and math.isfinite(h)):
        raise RequestError("h must be positive and finite")
    return float(h)


def _prepare(req):
    inst = load_problem(req.problem)
    w = resolve_weights(req.weights, inst)
    return inst, w, resolve_h(req.h, inst, w, req.phi_n)


def handle_solve(req: SolveRequest) -> SolveResponse:
    inst, w, h = _prepare(req)
    try:
        cfg = SolverConfig(h=h, tol_kkt=req.tol_kkt, max_iters=req.max_iters, step_rule=req.step_rule)
    except ValueError as exc:
        raise RequestError(str(exc)) from exc
    res = solve_weighted_l1(inst, w, cfg)
    dual = strict_dual_feasibility(inst.A, inst.y, res.x_hat, w, h)
    return SolveResponse(x_hat=res.x_hat.tolist(), support=res.support.tolist(),
                         kkt_residual=res.kkt_residual, iterations=res.iterations,
                         objective=res.objective, converged=res.converged, h=h,
                         dual_margin=dual.margin, unique=dual.unique)


def handle_check(req: ProblemRequest) -> CertificateResponse:
    inst, w, h = _prepare(req)
    if inst.signal.k == 0:
        raise RequestError("certificate needs a nonempty true support")
    cert = check_recovery_events(inst, w, h)
    return CertificateResponse(**cert.to_dict(), h=h)


def handle_oracle(req: ProblemRequest) -> OracleResponse:
    inst, w, h = _prepare(req)
    if inst.n > MAX_N:
        raise RequestError(f"oracle refuses n = {inst.n}: exhaustive search is limited to n <= {MAX_N}")
    res = brute_force_minimum(inst, w, h)
    return OracleResponse(**res.to_dict(), h=h)


def handle_predict(req: PredictRequest) -> PredictResponse:
    if not req.n > req.k:
        raise RequestError("need n > k")
    h = select_h(req.m, req.n, req.k, req.eta, req.sigma_z, req.sigma_a, req.phi_n)
    m_star = sample_threshold(req.n, req.k, req.eta, h, req.sigma_z, req.sigma_a, req.epsilon_prime)
    try:
        tuned = tuned_threshold(req.n, req.k, req.eta, req.phi_n, req.epsilon_prime)
    except ValueError:
        tuned = math.inf
    # with unit off-support weights the support weight is sqrt(eta)
    ws = req.support_weight if req.support_weight is not None else math.sqrt(req.eta)
    g = gap(h, [ws], [0], [1.0], req.m, req.sigma_z, req.sigma_a, req.k, req.c3)
    return PredictResponse(
        h=h, m_star=m_star, theta_m_star=rescaled_theta(m_star, req.n, req.k),
        m_star_tuned=tuned, theta_m_star_tuned=rescaled_theta(tuned, req.n, req.k),
        gap=g, theta_m=rescaled_theta(req.m, req.n, req.k),
    )


def handle_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResponse:
    return SweepResponse(records=records_to_dicts(run_sweep(cfg, workers=workers)))


def handle_plot(req: PlotRequest) -> str:
    if req.x not in ("m", "theta"):
        raise RequestError("x must be 'm' or 'theta'")
    try:
        records = [SweepRecord(**r) for r in req.records]
    except TypeError as exc:
        raise RequestError(f"invalid record: {exc}") from exc
    return render_svg(records, req.x)
