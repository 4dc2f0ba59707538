"""Weighted LASSO solver and first-order optimality checks.

The program is::

    minimize  (1/2m) ||A x - y||^2 + h * sum_i w_i |x_i|,   w_i > 0

solved by accelerated proximal gradient (FISTA) with backtracking,
monotone function-value restart, and an exact polish on the current sign
pattern once it stops changing.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import SingularMatrixError, cholesky, cho_solve


class StepSizeError(FloatingPointError):
    """The iteration produced a non-finite objective."""


def as_weights(w, n=None):
    """Validate a weight vector: finite, strictly positive, length `n`."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if n is not None and w.shape[0] != n:
        raise ValueError(f"weight vector has length {w.shape[0]}, expected {n}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be finite and strictly positive")
    return w


@dataclass(frozen=True)
class SolverConfig:
    h: float
    max_iters: int = 50_000
    tol_kkt: float = 1e-9
    tol_obj: float = 0.0
    step_rule: str = "backtracking"
    polish: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("regularization weight h must be positive")
        if not self.tol_kkt > 0:
            raise ValueError("tol_kkt must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


@dataclass
class SolveResult:
    x_hat: np.ndarray
    iterations: int
    objective_trace: list = field(repr=False)
    kkt_residual: float
    converged: bool

    @property
    def objective(self):
        return self.objective_trace[-1]

    @property
    def support(self):
        return np.flatnonzero(self.x_hat)


def _check_dims(A, y, x, w):
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    m, n = A.shape
    if y.shape != (m,) or x.shape != (n,) or w.shape != (n,):
        raise ValueError(
            f"dimension mismatch: A {A.shape}, y {y.shape}, x {x.shape}, w {w.shape}")
    return A, y, x, w


def objective(A, y, x, w, h):
    """``(1/2m)||Ax - y||^2 + h * sum(w * |x|)``."""
    A, y, x, w = _check_dims(A, y, x, w)
    r = A @ x - y
    return float(r @ r / (2 * A.shape[0]) + h * np.sum(w * np.abs(x)))


def soft_threshold(v, tau):
    """``sign(v) * max(|v| - tau, 0)``, with a literal 0.0 in the dead zone.

    Works elementwise on arrays; `tau` may be an array of thresholds.
    """
    v = np.asarray(v, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("threshold must be non-negative")
    out = np.where(np.abs(v) > tau, v - np.copysign(tau, v), 0.0)
    return float(out) if out.ndim == 0 else out


def _kkt_from_grad(x, g, tw):
    nz = x != 0
    viol = np.where(nz, np.abs(g + tw * np.sign(x)), np.maximum(np.abs(g) - tw, 0.0))
    return float(np.max(viol, initial=0.0))


def kkt_residual(A, y, x, w, h):
    """Sup-norm distance from a valid subgradient certificate.

    With ``g = A^T (A x - y) / m`` this is the largest of
    ``|g_i + h w_i sign(x_i)|`` over nonzero coordinates and
    ``max(|g_i| - h w_i, 0)`` over zero ones.
    """
    A, y, x, w = _check_dims(A, y, x, w)
    g = A.T @ (A @ x - y) / A.shape[0]
    return _kkt_from_grad(x, g, h * w)


@dataclass(frozen=True)
class DualReport:
    strict: bool
    margin: float
    full_rank: bool

    @property
    def unique(self):
        return self.strict and self.full_rank


def strict_dual_feasibility(A, y, x, w, h):
    """Off-support dual margin and rank of the active columns at `x`.

    ``margin = min_{i not in supp(x)} (h w_i - |A_i^T (y - A x)| / m)``;
    a positive margin with full-rank active columns certifies `x` as the
    unique minimizer (given a small KKT residual).
    """
    A, y, x, w = _check_dims(A, y, x, w)
    m = A.shape[0]
    active = x != 0
    corr = A.T @ (y - A[:, active] @ x[active]) / m
    off = ~active
    margin = float(np.min(h * w[off] - np.abs(corr[off]))) if off.any() else float("inf")
    try:
        A_act = A[:, active]
        cholesky(A_act.T @ A_act)
        full_rank = True
    except SingularMatrixError:
        full_rank = False
    return DualReport(strict=margin > 0, margin=margin, full_rank=full_rank)


def critical_h(A, y, w):
    """Smallest h for which x = 0 is optimal."""
    A = np.asarray(A, dtype=np.float64)
    return float(np.max(np.abs(A.T @ y) / (A.shape[0] * np.asarray(w))))


def pattern_solve(A, y, tw, support, signs, L=None):
    """Solve the stationarity equations on a fixed sign pattern.

    Returns ``x_T = (A_T^T A_T)^{-1} (A_T^T y - m * tw_T * s)``; `tw` is
    the per-coordinate threshold ``h * w``.
    """
    m = A.shape[0]
    A_T = A[:, support]
    if L is None:
        L = cholesky(A_T.T @ A_T)
    return cho_solve(L, A_T.T @ y - m * tw[support] * signs)


def solve_arrays(A, y, w, cfg, x0=None):
    """Run the solver on raw arrays; see `solve_weighted_l1`."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = A.shape
    w = as_weights(w, n)
    tw = cfg.h * w
    AT = A.T

    def smooth(r):
        return float(r @ r) / (2 * m)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    Ax = A @ x
    g = AT @ (Ax - y) / m
    F = smooth(Ax - y) + float(tw @ np.abs(x))
    trace = [F]
    kkt = _kkt_from_grad(x, g, tw)

    if cfg.step_rule == "fixed":
        step = m / np.linalg.norm(A, 2) ** 2 if A.size else 1.0
        expand = 1.0
    else:
        fro2 = float(np.sum(A * A))
        step = m / fro2 if fro2 > 0 else 1.0
        expand = 1.25

    x_prev, Ax_prev, g_prev = x, Ax, g
    t = 1.0
    beta = 0.0
    stable = 0
    pattern = np.sign(x)
    tried = None
    it = 0
    while kkt > cfg.tol_kkt and it < cfg.max_iters:
        it += 1
        v = x + beta * (x - x_prev)
        Av = Ax + beta * (Ax - Ax_prev)
        gv = g + beta * (g - g_prev)
        fv = smooth(Av - y)
        step *= expand
        while True:
            x_new = soft_threshold(v - step * gv, step * tw)
            Ax_new = A @ x_new
            f_new = smooth(Ax_new - y)
            if not np.isfinite(f_new):
                raise StepSizeError(f"non-finite objective at iteration {it}")
            d = x_new - v
            if cfg.step_rule == "fixed" or f_new <= fv + gv @ d + (d @ d) / (2 * step) + 1e-14 * max(fv, 1.0):
                break
            step *= 0.5
        F_new = f_new + float(tw @ np.abs(x_new))
        if F_new > F and beta > 0:
            # function-value restart: retry a plain proximal step from x
            x_prev, Ax_prev, g_prev = x, Ax, g
            t, beta = 1.0, 0.0
            trace.append(F)
            continue
        g_new = AT @ (Ax_new - y) / m
        x_prev, Ax_prev, g_prev = x, Ax, g
        x, Ax, g, F = x_new, Ax_new, g_new, min(F_new, F)
        trace.append(F)
        kkt = _kkt_from_grad(x, g, tw)
        t_next = (1 + np.sqrt(1 + 4 * t * t)) / 2
        beta = (t - 1) / t_next
        t = t_next
        if cfg.tol_obj > 0 and abs(trace[-2] - F) <= cfg.tol_obj * max(abs(F), 1e-300):
            break

        new_pattern = np.sign(x)
        if np.array_equal(new_pattern, pattern):
            stable += 1
        else:
            pattern, stable = new_pattern, 0
        if not cfg.polish or kkt <= cfg.tol_kkt or stable < 3:
            continue
        if tried is not None and np.array_equal(tried, pattern):
            continue
        tried = pattern
        support = np.flatnonzero(pattern)
        try:
            z = pattern_solve(A, y, tw, support, pattern[support])
        except SingularMatrixError:
            continue
        if not np.array_equal(np.sign(z), pattern[support]):
            continue
        xc = np.zeros(n)
        xc[support] = z
        Axc = A[:, support] @ z
        Fc = smooth(Axc - y) + float(tw @ np.abs(xc))
        if Fc > F:
            continue
        gc = AT @ (Axc - y) / m
        x_prev, Ax_prev, g_prev = xc, Axc, gc
        x, Ax, g, F = xc, Axc, gc, Fc
        trace[-1] = F
        kkt = _kkt_from_grad(x, g, tw)
        t, beta = 1.0, 0.0

    kkt = kkt_residual(A, y, x, w, cfg.h)
    return SolveResult(x_hat=x, iterations=it, objective_trace=trace,
                       kkt_residual=kkt, converged=kkt <= cfg.tol_kkt)


def solve_weighted_l1(inst, w, cfg):
    """Minimize the weighted LASSO objective for a `ProblemInstance`.

    Stops once `kkt_residual` drops to ``cfg.tol_kkt`` or after
    ``cfg.max_iters`` iterations; ``converged`` records which. Zero
    entries of ``x_hat`` are exact, so ``sign(x_hat)`` is the recovered
    sign pattern.
    """
    return solve_arrays(inst.A, inst.y, w, cfg)
