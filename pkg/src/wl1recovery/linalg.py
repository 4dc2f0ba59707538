"""Dense linear algebra on the Gram matrix of a column subset.

Matrices and vectors are plain float64 numpy arrays. Every solve goes
through a Cholesky factorization of ``A_S^T A_S``; a pivot at or below
``PIVOT_RTOL * max(diag)`` is treated as rank deficiency.
"""

import numpy as np

PIVOT_RTOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a Gram matrix is not numerically positive definite."""


def as_matrix(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def as_vector(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def column_submatrix(M, idx):
    """Return the columns of `M` listed in `idx`, in order.

    `idx` must be strictly increasing and in range.
    """
    M = np.asarray(M, dtype=np.float64)
    idx = np.asarray(idx, dtype=np.intp).reshape(-1)
    if idx.size:
        if idx.min() < 0 or idx.max() >= M.shape[1]:
            raise IndexError(f"column index out of range for {M.shape[1]} columns")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("column indices must be strictly increasing")
    return M[:, idx]


def cholesky(G):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises
    ------
    SingularMatrixError
        If factorization fails or a pivot ``L[j, j]**2`` falls below
        ``PIVOT_RTOL`` times the largest diagonal entry of `G`.
    """
    G = np.asarray(G, dtype=np.float64)
    if G.shape[0] != G.shape[1]:
        raise ValueError(f"Gram matrix must be square, got {G.shape}")
    if G.shape[0] == 0:
        return np.zeros((0, 0))
    scale = np.max(np.diag(G))
    if not scale > 0:
        raise SingularMatrixError("Gram matrix has no positive diagonal entry")
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if np.min(np.diag(L)) ** 2 <= PIVOT_RTOL * scale:
        raise SingularMatrixError("Gram matrix is numerically rank deficient")
    return L


def cho_solve(L, b):
    """Solve ``L L^T z = b`` given the lower factor `L`; `b` may be 2-D."""
    from scipy.linalg import solve_triangular

    if L.shape[0] == 0:
        return np.zeros_like(np.asarray(b, dtype=np.float64))
    z = solve_triangular(L, b, lower=True, check_finite=False)
    return solve_triangular(L.T, z, lower=False, check_finite=False)


def solve_spd(G, b):
    """Solve ``G z = b`` for symmetric positive definite `G`."""
    G = as_matrix(G)
    b = as_vector(b)
    if G.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: G is {G.shape}, b has {b.shape[0]}")
    return cho_solve(cholesky(G), b)


def gram(A_S):
    A_S = np.asarray(A_S, dtype=np.float64)
    return A_S.T @ A_S


def pseudoinverse_apply(A_S, v):
    """Return ``(A_S^T A_S)^{-1} A_S^T v`` for full column rank `A_S`."""
    A_S = as_matrix(A_S)
    v = as_vector(v)
    if A_S.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: A_S is {A_S.shape}, v has {v.shape[0]}")
    return cho_solve(cholesky(gram(A_S)), A_S.T @ v)


def residual_projection(A_S, v):
    """Project `v` onto the orthogonal complement of the range of `A_S`."""
    v = as_vector(v)
    coef = pseudoinverse_apply(A_S, v)
    r = v - np.asarray(A_S, dtype=np.float64) @ coef
    # one refinement pass keeps the output orthogonal at the 1e-9 level
    # when A_S is moderately conditioned
    return r - np.asarray(A_S, dtype=np.float64) @ pseudoinverse_apply(A_S, r)
