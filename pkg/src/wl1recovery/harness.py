"""Monte Carlo phase-transition sweeps.

A sweep visits every ``(n, m)`` grid point, runs independent trials of
draw-solve-compare, and stores one `SweepRecord` per point. Trial ``t``
at ``(n, m)`` always draws from ``seeded_rng(master_seed, n, m, t)``, so
results do not depend on execution order or on the number of workers.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, fields
import json
import logging
import math
from pathlib import Path
from typing import List, Literal, Optional, Union
from xml.sax.saxutils import escape

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import isotonic_regression

from .ensemble import RNG_ALGORITHM, EnsembleConfig, sample_instance, seeded_rng, sparsity_rule
from .linalg import SingularMatrixError
from .solver import SolverConfig, StepSizeError, solve_weighted_l1
from .theory import check_recovery_events, eta_of, m_for_theta, rescaled_theta, select_h

log = logging.getLogger(__name__)

CSV_FIELDS = ("n", "k", "m", "theta", "eta", "h", "trials", "successes", "prob", "master_seed")


class ThetaGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theta_min: float = Field(0.25, gt=0)
    theta_max: float = Field(3.0, gt=0)
    steps: int = Field(25, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.theta_max < self.theta_min:
            raise ValueError("theta_max must be >= theta_min")
        return self

    def values(self):
        if self.steps == 1:
            return [self.theta_min]
        return np.linspace(self.theta_min, self.theta_max, self.steps).tolist()


class WeightScheme(BaseModel):
    """``uniform`` (all ones), ``support`` (``support_weight`` on the true
    support, 1 elsewhere) or ``file`` (explicit per-index weights)."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["uniform", "support", "file"] = "uniform"
    support_weight: float = Field(1.0, gt=0)
    weights: Optional[List[float]] = None
    path: Optional[str] = None

    @model_validator(mode="after")
    def _load(self):
        if self.kind == "file":
            if self.weights is None:
                if self.path is None:
                    raise ValueError("file weight scheme needs 'weights' or 'path'")
                self.weights = load_weight_list(self.path)
            if any(not (v > 0 and math.isfinite(v)) for v in self.weights):
                raise ValueError("weight entries must be finite and > 0")
        return self

    def vector(self, n, support):
        if self.kind == "uniform":
            return np.ones(n)
        if self.kind == "support":
            w = np.ones(n)
            w[support] = self.support_weight
            return w
        if len(self.weights) != n:
            raise ValueError(f"weight file has {len(self.weights)} entries, n = {n}")
        return np.asarray(self.weights, dtype=np.float64)


class SweepConfig(BaseModel):
    """Configuration of a phase-transition sweep (JSON, snake_case)."""

    model_config = ConfigDict(extra="forbid")

    n_list: List[int] = Field(min_length=1)
    sparsity: Union[Literal["rule"], int] = "rule"
    m_grid: Union[List[int], ThetaGrid] = Field(default_factory=ThetaGrid)
    trials: int = Field(200, ge=1)
    weight_scheme: WeightScheme = Field(default_factory=WeightScheme)
    sigma_z: float = Field(0.5, ge=0)
    sigma_a: float = Field(1.0, gt=0)
    phi_n: float = Field(9.0, ge=2)
    h: Optional[float] = Field(None, gt=0)
    master_seed: int = 0
    success_definition: Literal["sign_pattern"] = "sign_pattern"
    check_certificates: bool = False
    tol_kkt: float = Field(1e-9, gt=0)
    max_iters: int = Field(50_000, ge=1)

    @field_validator("n_list")
    @classmethod
    def _dims(cls, v):
        if any(n < 2 for n in v):
            raise ValueError("every n must be >= 2")
        return sorted(set(v))

    @model_validator(mode="after")
    def _check(self):
        if self.h is None and self.sigma_z == 0:
            raise ValueError("sigma_z = 0 needs an explicit h")
        for n in self.n_list:
            if not 0 < self.k_for(n) < n:
                raise ValueError(f"sparsity k = {self.k_for(n)} invalid for n = {n}")
        if isinstance(self.m_grid, list) and any(m < 1 for m in self.m_grid):
            raise ValueError("m values must be >= 1")
        return self

    def k_for(self, n):
        return sparsity_rule(n) if self.sparsity == "rule" else int(self.sparsity)

    def m_values(self, n):
        if isinstance(self.m_grid, list):
            return sorted(set(self.m_grid))
        k = self.k_for(n)
        return sorted({m_for_theta(t, n, k) for t in self.m_grid.values()})

    def points(self):
        return [(n, self.k_for(n), m) for n in self.n_list for m in self.m_values(n)]


@dataclass(frozen=True)
class TrialOutcome:
    seed: int
    trial: int
    success: bool
    converged: bool
    kkt_residual: float
    iterations: int
    eta: float
    h: float
    event1_holds: Optional[bool] = None
    event2_holds: Optional[bool] = None


@dataclass(frozen=True)
class SweepRecord:
    n: int
    k: int
    m: int
    theta: float
    eta: float
    h: float
    trials: int
    successes: int
    prob: float
    master_seed: int


def run_trial(cfg, n, k, m, trial):
    """Draw, solve and score one trial at grid point ``(n, k, m)``."""
    rng = seeded_rng(cfg.master_seed, n, m, trial)
    ens = EnsembleConfig(n=n, k=k, m=m, sigma_a=cfg.sigma_a, sigma_z=cfg.sigma_z,
                         seed=cfg.master_seed)
    inst = sample_instance(ens, rng)
    S = inst.signal.support
    w = cfg.weight_scheme.vector(n, S)
    eta = eta_of(w, S)
    h = cfg.h if cfg.h is not None else select_h(m, n, k, eta, cfg.sigma_z, cfg.sigma_a, cfg.phi_n)
    try:
        res = solve_weighted_l1(inst, w, SolverConfig(h=h, tol_kkt=cfg.tol_kkt, max_iters=cfg.max_iters))
        converged, kkt, its = res.converged, res.kkt_residual, res.iterations
        match = bool(np.array_equal(np.sign(res.x_hat), np.sign(inst.x_star)))
    except StepSizeError:
        converged, kkt, its, match = False, float("nan"), 0, False
    if not converged:
        log.warning("trial (n=%d, m=%d, t=%d) did not converge; counted as failure", n, m, trial)
    ev1 = ev2 = None
    if cfg.check_certificates:
        try:
            cert = check_recovery_events(inst, w, h)
            ev1, ev2 = cert.event1_holds, cert.event2_holds
        except SingularMatrixError:
            ev1 = ev2 = False
    return TrialOutcome(seed=cfg.master_seed, trial=trial, success=match and converged,
                        converged=converged, kkt_residual=kkt, iterations=its, eta=eta, h=h,
                        event1_holds=ev1, event2_holds=ev2)


def run_point(cfg, n, k, m):
    outcomes = [run_trial(cfg, n, k, m, t) for t in range(cfg.trials)]
    successes = sum(o.success for o in outcomes)
    record = SweepRecord(
        n=n, k=k, m=m, theta=rescaled_theta(m, n, k),
        eta=float(np.mean([o.eta for o in outcomes])),
        h=float(np.mean([o.h for o in outcomes])),
        trials=cfg.trials, successes=successes, prob=successes / cfg.trials,
        master_seed=cfg.master_seed,
    )
    return record, outcomes


def _run_point_star(args):
    return run_point(*args)


def run_sweep(cfg, workers=1, keep_outcomes=False):
    """Run every grid point of `cfg` and return records sorted by (n, m).

    With ``keep_outcomes`` the per-trial outcomes are returned as well,
    as a dict keyed by ``(n, m)``.
    """
    tasks = [(cfg, n, k, m) for n, k, m in cfg.points()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point_star, tasks))
    else:
        results = [run_point(*t) for t in tasks]
    results.sort(key=lambda r: (r[0].n, r[0].m))
    records = [r for r, _ in results]
    if keep_outcomes:
        return records, {(r.n, r.m): o for r, o in results}
    return records


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def emit_csv(records, path):
    """Write records as CSV sorted by (n, m); floats keep 17 significant digits."""
    path = Path(path)
    rows = sorted(records, key=lambda r: (r.n, r.m))
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_FIELDS)
            for r in rows:
                writer.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path):
    path = Path(path)
    types = {f.name: f.type for f in fields(SweepRecord)}
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_FIELDS:
                raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
            return [SweepRecord(**{k: (int(v) if types[k] is int else float(v)) for k, v in row.items()})
                    for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc


def write_metadata(cfg, path):
    from . import __version__

    meta = {"package_version": __version__, "rng": RNG_ALGORITHM, "config": cfg.model_dump()}
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


def load_weight_list(path):
    text = Path(path).read_text()
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        values = text.split()
    return [float(v) for v in values]


def by_n(records):
    curves = {}
    for r in sorted(records, key=lambda r: (r.n, r.m)):
        curves.setdefault(r.n, []).append(r)
    return curves


def smoothed_probs(records):
    """Isotonic (non-decreasing in m) fit of the success probabilities."""
    probs = np.array([r.prob for r in sorted(records, key=lambda r: r.m)])
    return isotonic_regression(probs).x


def crossing_theta(records, level=0.5):
    """First theta at which the smoothed curve reaches `level`, linearly
    interpolated; None if it never does."""
    recs = sorted(records, key=lambda r: r.m)
    p = smoothed_probs(recs)
    th = [r.theta for r in recs]
    for i, pi in enumerate(p):
        if pi >= level:
            if i == 0 or p[i] == p[i - 1]:
                return th[i]
            return th[i - 1] + (level - p[i - 1]) * (th[i] - th[i - 1]) / (p[i] - p[i - 1])
    return None


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def emit_plot(records, path, x_axis="theta"):
    """Write an SVG chart of success probability, one polyline per n."""
    if not records:
        raise ValueError("cannot plot an empty record list")
    if x_axis not in ("m", "theta"):
        raise ValueError("x_axis must be 'm' or 'theta'")
    Path(path).write_text(render_svg(records, x_axis))
    return Path(path)


def render_svg(records, x_axis="theta", width=640, height=420):
    curves = by_n(records)
    xs = [getattr(r, x_axis) for r in records]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    left, right, top, bottom = 60, 150, 20, 50
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(p):
        return top + (1 - p) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i in range(6):
        p = i / 5
        out.append(f'<line x1="{left - 4}" y1="{py(p):.2f}" x2="{left}" y2="{py(p):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(p) + 4:.2f}" text-anchor="end">{p:.1f}</text>')
    for i in range(6):
        x = x_lo + i * (x_hi - x_lo) / 5
        out.append(f'<line x1="{px(x):.2f}" y1="{top + ph}" x2="{px(x):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(x):.2f}" y="{top + ph + 18}" text-anchor="middle">{x:.3g}</text>')
    xlabel = "theta = m / (2 k log(n - k))" if x_axis == "theta" else "m"
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">probability of support recovery</text>')
    for j, (n, recs) in enumerate(curves.items()):
        color = _PALETTE[j % len(_PALETTE)]
        pts = " ".join(f"{px(getattr(r, x_axis)):.2f},{py(r.prob):.2f}" for r in recs)
        if len(recs) > 1:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        for r in recs:
            out.append(f'<circle cx="{px(getattr(r, x_axis)):.2f}" cy="{py(r.prob):.2f}" r="2.5" fill="{color}"/>')
        ly = top + 16 + 18 * j
        out.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly}">n={n}, k={recs[0].k}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def records_to_dicts(records):
    return [asdict(r) for r in records]
