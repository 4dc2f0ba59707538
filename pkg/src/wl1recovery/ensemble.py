"""Gaussian problem instances ``y = A x* + Z`` with k-sparse signals."""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .linalg import as_matrix, as_vector

RNG_ALGORITHM = f"numpy-{np.__version__}:Philox4x64-10:SeedSequence:ziggurat-normal"


class ConfigError(ValueError):
    pass


def seeded_rng(seed, *spawn_key):
    """Deterministic generator for `seed` and an optional integer path.

    Streams for different ``spawn_key`` tuples are statistically
    independent, so trial ``(seed, n, m, t)`` can be drawn in any order.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(seq))


def sparsity_rule(n):
    """Return ``ceil(0.4 * sqrt(n))`` using exact integer arithmetic."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    # k >= 0.4 sqrt(n)  <=>  25 k^2 >= 4 n
    k = math.isqrt(4 * n // 25)
    while 25 * k * k < 4 * n:
        k += 1
    return k


@dataclass(frozen=True)
class SparseSignal:
    n: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp).reshape(-1)
        values = as_vector(np.asarray(self.values, dtype=np.float64).reshape(-1))
        if support.shape != values.shape:
            raise ConfigError("support and values must have equal length")
        if support.size > self.n:
            raise ConfigError("support larger than ambient dimension")
        if support.size and (support.min() < 0 or support.max() >= self.n):
            raise ConfigError("support index out of range")
        if np.any(np.diff(support) <= 0):
            raise ConfigError("support must be strictly increasing")
        if np.any(values == 0):
            raise ConfigError("signal values on the support must be nonzero")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @property
    def k(self):
        return int(self.support.size)

    @property
    def signs(self):
        return np.sign(self.values)

    def dense(self):
        x = np.zeros(self.n)
        x[self.support] = self.values
        return x


@dataclass(frozen=True)
class EnsembleConfig:
    """Parameters of one random instance.

    ``magnitude_rule`` is ``"rademacher"`` (values +-1), a positive float
    ``mu`` (values +-mu with random signs) or an explicit sequence of k
    nonzero values.
    """

    n: int
    k: int
    m: int
    sigma_a: float = 1.0
    sigma_z: float = 0.5
    magnitude_rule: object = "rademacher"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.k < self.n:
            raise ConfigError(f"need 0 < k < n, got k={self.k}, n={self.n}")
        if self.m < 1:
            raise ConfigError(f"need m >= 1, got m={self.m}")
        if not self.sigma_a > 0:
            raise ConfigError("sigma_a must be positive")
        if not self.sigma_z >= 0:
            raise ConfigError("sigma_z must be non-negative")
        rule = self.magnitude_rule
        if isinstance(rule, str):
            if rule != "rademacher":
                raise ConfigError(f"unknown magnitude rule {rule!r}")
        elif isinstance(rule, (int, float)):
            if not rule > 0:
                raise ConfigError("fixed magnitude must be positive")
        else:
            vals = tuple(float(v) for v in rule)
            if len(vals) != self.k or any(v == 0 for v in vals):
                raise ConfigError("custom magnitudes must be k nonzero values")
            object.__setattr__(self, "magnitude_rule", vals)


@dataclass(frozen=True)
class ProblemInstance:
    A: np.ndarray
    z: np.ndarray
    y: np.ndarray
    signal: SparseSignal
    config: EnsembleConfig = field(compare=False)

    def __post_init__(self):
        A, z, y = as_matrix(self.A), as_vector(self.z), as_vector(self.y)
        if A.shape != (self.config.m, self.signal.n) or z.shape != (A.shape[0],) or y.shape != z.shape:
            raise ConfigError("instance arrays have inconsistent shapes")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def x_star(self):
        return self.signal.dense()

    def reconstruction_error(self):
        return float(np.max(np.abs(self.y - self.A @ self.x_star - self.z), initial=0.0))

    def to_dict(self):
        c = self.config
        return {
            "n": c.n,
            "k": c.k,
            "m": c.m,
            "sigma_a": c.sigma_a,
            "sigma_z": c.sigma_z,
            "seed": c.seed,
            "support": self.signal.support.tolist(),
            "values": self.signal.values.tolist(),
            "A": self.A.ravel().tolist(),
            "z": self.z.tolist(),
            "y": self.y.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            n, k, m = int(d["n"]), int(d["k"]), int(d["m"])
            signal = SparseSignal(n, d["support"], d["values"])
            config = _unchecked_config(
                n=n, k=k, m=m,
                sigma_a=float(d.get("sigma_a", 1.0)),
                sigma_z=float(d.get("sigma_z", 0.0)),
                magnitude_rule=tuple(signal.values),
                seed=int(d.get("seed", 0)),
            )
            A = np.asarray(d["A"], dtype=np.float64)
            if A.size != m * n:
                raise ConfigError(f"A has {A.size} entries, expected m*n = {m * n}")
            y = np.asarray(d["y"], dtype=np.float64)
            z = np.asarray(d["z"], dtype=np.float64) if "z" in d else np.zeros(m)
        except KeyError as exc:
            raise ConfigError(f"problem document is missing field {exc}") from exc
        if signal.k != k:
            raise ConfigError("support length does not match k")
        return cls(A=A.reshape(m, n), z=z, y=y, signal=signal, config=config)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _unchecked_config(**fields):
    # explicit designs may have k = 0 or k = n, which random configs forbid
    cfg = object.__new__(EnsembleConfig)
    for name, val in fields.items():
        object.__setattr__(cfg, name, val)
    return cfg


def sample_signal(n, k, magnitude_rule, rng):
    support = np.sort(rng.choice(n, size=k, replace=False))
    if isinstance(magnitude_rule, str):
        values = rng.choice(np.array([-1.0, 1.0]), size=k)
    elif isinstance(magnitude_rule, (int, float)):
        values = float(magnitude_rule) * rng.choice(np.array([-1.0, 1.0]), size=k)
    else:
        values = np.asarray(magnitude_rule, dtype=np.float64)
    return SparseSignal(n, support, values)


def sample_instance(cfg, rng=None):
    """Draw ``(A, Z, x*)`` and form ``y = A x* + Z``.

    Draw order is fixed: support, signal values, A (row-major), Z. With
    no `rng`, the stream comes from ``seeded_rng(cfg.seed)``.
    """
    if rng is None:
        rng = seeded_rng(cfg.seed)
    signal = sample_signal(cfg.n, cfg.k, cfg.magnitude_rule, rng)
    A = cfg.sigma_a * rng.standard_normal((cfg.m, cfg.n))
    if cfg.sigma_z > 0:
        z = cfg.sigma_z * rng.standard_normal(cfg.m)
    else:
        z = np.zeros(cfg.m)
    y = A[:, signal.support] @ signal.values + z
    return ProblemInstance(A=A, z=z, y=y, signal=signal, config=cfg)


def make_instance(A, x_star, z=None, sigma_a=1.0, sigma_z=0.0, seed=0):
    """Build an instance from explicit arrays, mainly for hand-made designs."""
    A = as_matrix(A)
    x_star = as_vector(x_star)
    m, n = A.shape
    support = np.flatnonzero(x_star)
    z = np.zeros(m) if z is None else as_vector(z)
    signal = SparseSignal(n, support, x_star[support])
    cfg = _unchecked_config(n=n, k=signal.k, m=m, sigma_a=sigma_a, sigma_z=sigma_z,
                            magnitude_rule=tuple(signal.values), seed=seed)
    return ProblemInstance(A=A, z=z, y=A @ x_star + z, signal=signal, config=cfg)
