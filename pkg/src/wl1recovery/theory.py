"""Closed-form recovery quantities for weighted LASSO support recovery.

All logarithms are natural. ``S`` is the true support and ``u_S`` its
sign vector; the functions in the first half need the ground truth of a
`ProblemInstance` and are meant as certificates, not estimators.
"""

from dataclasses import dataclass
import math

import numpy as np

from .linalg import cholesky, cho_solve
from .solver import as_weights


@dataclass(frozen=True)
class RecoveryCertificate:
    event1_holds: bool
    event1_margin: float
    event2_holds: bool
    x_dagger: np.ndarray

    @property
    def holds(self):
        return self.event1_holds and self.event2_holds

    def to_dict(self):
        return {
            "event1_holds": self.event1_holds,
            "event1_margin": self.event1_margin,
            "event2_holds": self.event2_holds,
            "x_dagger": self.x_dagger.tolist(),
        }


@dataclass(frozen=True)
class ScalingParams:
    """Constants entering the sample-size law.

    `c3` is the unnamed proof constant of the gap g(h); it has no known
    value and only affects diagnostics.
    """

    xi: float
    eta: float
    epsilon_prime: float = 0.0
    phi_n: float = 9.0
    c3: float = 1.0

    def __post_init__(self):
        if not (self.xi > 0 and self.eta > 0):
            raise ValueError("xi and eta must be positive")
        if not self.phi_n >= 2:
            raise ValueError("phi_n must be >= 2")
        if not self.epsilon_prime >= 0:
            raise ValueError("epsilon_prime must be >= 0")
        if not self.c3 > 0:
            raise ValueError("c3 must be positive")

    @classmethod
    def from_weights(cls, w, support, **kwargs):
        return cls(xi=xi_of(w, support), eta=eta_of(w, support), **kwargs)


def _true_support_terms(inst, w, h):
    w = as_weights(w, inst.n)
    S = inst.signal.support
    u_S = inst.signal.signs
    A_S = inst.A[:, S]
    L = cholesky(A_S.T @ A_S)
    ls_noise = cho_solve(L, A_S.T @ inst.z)
    bias_dir = cho_solve(L, w[S] * u_S)
    return w, S, u_S, A_S, ls_noise, bias_dir


def x_dagger(inst, w, h):
    """Candidate minimizer built on the true support.

    ``x_S = x*_S + A_S^+ Z - m h (A_S^T A_S)^{-1} W_S u_S`` and zero
    elsewhere.
    """
    w, S, u_S, A_S, ls_noise, bias_dir = _true_support_terms(inst, w, h)
    x = np.zeros(inst.n)
    x[S] = inst.signal.values + ls_noise - inst.m * h * bias_dir
    return x


def check_recovery_events(inst, w, h):
    """Evaluate the two sufficient events for exact sign recovery.

    Event 1 bounds the off-support correlations of the projected noise
    plus the shrinkage direction by ``h w_i``; event 2 asks that the
    shrunken least-squares estimate on ``S`` keeps the signs of ``x*``.
    """
    w, S, u_S, A_S, ls_noise, bias_dir = _true_support_terms(inst, w, h)
    m = inst.m
    projected_noise = inst.z - A_S @ ls_noise
    v = projected_noise + m * h * (A_S @ bias_dir)
    off = np.ones(inst.n, dtype=bool)
    off[S] = False
    corr = np.abs(inst.A[:, off].T @ v) / m
    margin = float(np.min(h * w[off] - corr)) if off.any() else float("inf")
    xd = np.zeros(inst.n)
    xd[S] = inst.signal.values + ls_noise - m * h * bias_dir
    event2 = bool(np.array_equal(np.sign(xd[S]), u_S))
    return RecoveryCertificate(event1_holds=margin > 0, event1_margin=margin,
                               event2_holds=event2, x_dagger=xd)


def xi_of(w, support):
    """Mean squared weight over the support."""
    w = as_weights(w)
    support = np.asarray(support, dtype=np.intp)
    if support.size == 0:
        raise ValueError("support must be nonempty")
    return float(np.mean(w[support] ** 2))


def eta_of(w, support):
    """``xi`` divided by the smallest squared off-support weight."""
    w = as_weights(w)
    off = np.ones(w.shape[0], dtype=bool)
    off[np.asarray(support, dtype=np.intp)] = False
    if not off.any():
        raise ValueError("support complement is empty")
    return xi_of(w, support) / float(np.min(w[off])) ** 2


def sample_threshold(n, k, eta, h, sigma_z, sigma_a, epsilon_prime=0.0):
    """Sufficient sample size
    ``2 eta k log(n-k) (1+eps') (1 + sigma_z^2 sigma_a^2 / (h^2 k))``.

    ``h = inf`` gives the noiseless limit.
    """
    if not n > k >= 1:
        raise ValueError("need n > k >= 1")
    if not h > 0:
        raise ValueError("h must be positive")
    noise = 0.0 if math.isinf(h) else sigma_z**2 * sigma_a**2 / (h * h * k)
    return 2 * eta * k * math.log(n - k) * (1 + epsilon_prime) * (1 + noise)


def select_h(m, n, k, eta, sigma_z, sigma_a, phi_n=9.0):
    """``sqrt(2 phi_n eta sigma_z^2 sigma_a^2 log(n-k) / m)``.

    Raises for ``sigma_z = 0``: the rule then returns 0, which leaves the
    program unregularized; pass an explicit h instead.
    """
    if not phi_n >= 2:
        raise ValueError("phi_n must be >= 2")
    if m < 1 or not n > k:
        raise ValueError("need m >= 1 and n > k")
    if not sigma_z > 0:
        raise ValueError("select_h needs sigma_z > 0; give h explicitly for noiseless data")
    return math.sqrt(2 * phi_n * eta * sigma_z**2 * sigma_a**2 * math.log(n - k) / m)


def tuned_threshold(n, k, eta, phi_n=9.0, epsilon_prime=0.0):
    """Sample size that suffices when h follows `select_h` at that m:
    ``2 eta k log(n-k) / ((1+eps')^{-1} - 1/phi_n)``.
    """
    denom = 1 / (1 + epsilon_prime) - 1 / phi_n
    if not denom > 0:
        raise ValueError("need (1+eps')^{-1} > 1/phi_n")
    return 2 * eta * k * math.log(n - k) / denom


def gap(h, w, support, signs, m, sigma_z, sigma_a, k, c3=1.0):
    """Smallest support magnitude the theory needs for sign consistency:
    ``c3 h ||W_S u_S||_inf + 6 sqrt(sigma_z^2 log(k) / (m sigma_a^2))``.
    """
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    w = as_weights(w)
    wu = w[np.asarray(support, dtype=np.intp)] * np.asarray(signs, dtype=np.float64)
    return c3 * h * float(np.max(np.abs(wu))) + 6 * math.sqrt(sigma_z**2 * math.log(k) / (m * sigma_a**2))


def rescaled_theta(m, n, k):
    """``m / (2 k log(n - k))``."""
    if not n > k >= 1:
        raise ValueError("need n > k >= 1")
    return m / (2 * k * math.log(n - k))


def m_for_theta(theta, n, k):
    """Nearest integer sample size to a rescaled value, at least 1."""
    return max(1, int(round(theta * 2 * k * math.log(n - k))))
