"""Exhaustive global minimizer for small weighted LASSO problems.

Every support ``T`` (by increasing size, then lexicographically) and
every sign vector ``s`` on it is tried: the stationarity equations give
``x_T``, which is kept when its signs equal ``s`` and all off-support
correlations stay within ``h w_i``. This uses no iterative solver, so it
serves as an independent reference for `solver`.
"""

from dataclasses import dataclass
import itertools

import numpy as np

from .linalg import SingularMatrixError, cholesky, cho_solve
from .solver import as_weights, objective

MAX_N = 14
# |x_T,i| at or below this counts as a sign violation; that coordinate is
# covered by the smaller pattern without it
ZERO_TOL = 1e-12
# dual margins within this band of zero are ties
MARGIN_TOL = 1e-10


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class Certificate:
    support: tuple
    signs: tuple
    x: np.ndarray
    margin: float
    objective: float


@dataclass(frozen=True)
class OracleResult:
    x_opt: np.ndarray
    support: tuple
    signs: tuple
    dual_margin: float
    unique: bool
    candidates: int = 1

    @property
    def pattern(self):
        return self.support, self.signs

    def to_dict(self):
        return {
            "x_opt": self.x_opt.tolist(),
            "support": list(self.support),
            "signs": list(self.signs),
            "dual_margin": self.dual_margin,
            "unique": self.unique,
            "candidates": self.candidates,
        }


def _sign_table(size):
    if size == 0:
        return np.zeros((0, 1))
    return np.array(list(itertools.product((-1.0, 1.0), repeat=size))).T


def enumerate_certificates(A, y, w, h):
    """All sign patterns whose stationary point passes the optimality test."""
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, n = A.shape
    if n > MAX_N:
        raise OracleError(f"oracle enumerates 3^n patterns; n = {n} exceeds {MAX_N}")
    w = as_weights(w, n)
    tw = h * w
    found = []
    for size in range(min(n, m) + 1):
        signs_all = _sign_table(size)
        for T in itertools.combinations(range(n), size):
            T = list(T)
            A_T = A[:, T]
            try:
                L = cholesky(A_T.T @ A_T)
            except SingularMatrixError:
                continue
            rhs = (A_T.T @ y)[:, None] - m * tw[T][:, None] * signs_all
            X = cho_solve(L, rhs)
            ok = np.all((np.sign(X) == signs_all) & (np.abs(X) > ZERO_TOL), axis=0)
            if not ok.any():
                continue
            X, S = X[:, ok], signs_all[:, ok]
            off = np.setdiff1d(np.arange(n), T)
            R = y[:, None] - A_T @ X
            if off.size:
                corr = np.abs(A[:, off].T @ R) / m
                margins = np.min(tw[off][:, None] - corr, axis=0)
            else:
                margins = np.full(X.shape[1], np.inf)
            for j in np.flatnonzero(margins >= -MARGIN_TOL):
                x = np.zeros(n)
                x[T] = X[:, j]
                found.append(Certificate(support=tuple(T), signs=tuple(int(s) for s in S[:, j]),
                                         x=x, margin=float(margins[j]),
                                         objective=objective(A, y, x, w, h)))
    return found


def brute_force_minimum(inst, w, h):
    """Global minimizer of the weighted LASSO for ``inst`` (n <= 14).

    ``unique`` is set when exactly one pattern passes with a dual margin
    above `MARGIN_TOL` (its active columns are full rank by construction).
    Otherwise the lowest-objective passing pattern is returned.
    """
    certs = enumerate_certificates(inst.A, inst.y, w, h)
    if not certs:
        raise OracleError("no sign pattern satisfies the optimality conditions")
    best = min(certs, key=lambda c: (c.objective, len(c.support)))
    unique = len(certs) == 1 and best.margin > MARGIN_TOL
    return OracleResult(x_opt=best.x, support=best.support, signs=best.signs,
                        dual_margin=best.margin, unique=unique, candidates=len(certs))
