import numpy as np
import pytest

from wl1recovery.ensemble import EnsembleConfig, make_instance, sample_instance

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def orthogonal_design(m, n, seed=0):
    """m x n matrix with A^T A = m I (needs m >= n)."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((m, n)))
    return np.sqrt(m) * q


def random_instance(n, k, m, seed, sigma_z=0.5):
    return sample_instance(EnsembleConfig(n=n, k=k, m=m, sigma_z=sigma_z, seed=seed))


@pytest.fixture
def ortho_instance():
    """Noiseless orthogonal design, x* = 1 on S = {1, 4}."""
    A = orthogonal_design(12, 6, seed=3)
    x = np.zeros(6)
    x[[1, 4]] = 1.0
    return make_instance(A, x)
