"""Dense linear algebra primitives.

Matrices are plain 2-d ``numpy`` arrays (float64 unless the caller chooses
otherwise). Cholesky factors follow the upper convention ``U.T @ U == A``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import AntipodalVectors, DimensionMismatch, NoConvergence, NotPositiveDefinite, ZeroVector


class EigenPair(NamedTuple):
    Q: np.ndarray
    eigenvalues: np.ndarray  # descending


def cholesky(A: np.ndarray) -> np.ndarray:
    """Upper-triangular ``U`` with ``U.T @ U == A``.

    Raises NotPositiveDefinite when a pivot is non-positive (typically a
    regulariser that is too small for the floating point precision in use).
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got {A.shape}")
    if A.shape[0] == 0:
        return np.zeros_like(A)
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        U = scipy.linalg.cholesky(A, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(U) > 0):
        raise NotPositiveDefinite("non-positive pivot")
    return U


def tri_solve(U: np.ndarray, B: np.ndarray, transposed: bool = False) -> np.ndarray:
    """Solve ``U X = B`` (back substitution) or ``U.T X = B`` (forward)."""
    U = np.asarray(U)
    B = np.asarray(B)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or B.shape[0] != U.shape[0]:
        raise DimensionMismatch(f"tri_solve: U {U.shape} vs B {B.shape}")
    if B.size == 0:
        return np.zeros_like(B, dtype=np.result_type(U, B))
    return scipy.linalg.solve_triangular(U, B, trans="T" if transposed else "N", lower=False, check_finite=False)


def cho_solve(U: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``(U.T U) X = B`` by forward then back substitution."""
    return tri_solve(U, tri_solve(U, B, transposed=True))


def _sorted_pair(w: np.ndarray, Q: np.ndarray) -> EigenPair:
    order = np.argsort(w)[::-1]
    return EigenPair(Q[:, order], w[order])


def jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> EigenPair:
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius mass drops
    below ``tol * ||A||_F``.
    """
    A = np.array(A, dtype=float)
    p_dim = A.shape[0]
    V = np.eye(p_dim)
    scale = np.linalg.norm(A)
    if scale == 0.0 or p_dim < 2:
        return _sorted_pair(np.diag(A).copy(), V)
    for _ in range(max_sweeps):
        # direct off-diagonal norm; subtracting squared norms loses half the digits
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            return _sorted_pair(np.diag(A).copy(), V)
        for p in range(p_dim - 1):
            for q in range(p + 1, p_dim):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    raise NoConvergence(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def sym_eig(A: np.ndarray, method: str = "lapack") -> EigenPair:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``method="lapack"`` delegates to ``numpy.linalg.eigh``; ``"jacobi"`` uses
    :func:`jacobi_eigh`.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"sym_eig needs a square matrix, got {A.shape}")
    if method == "jacobi":
        return jacobi_eigh(A)
    if method != "lapack":
        raise ValueError(f"unknown eigen method {method!r}")
    if not np.all(np.isfinite(A)):
        raise NoConvergence("matrix has non-finite entries")
    try:
        w, Q = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    return _sorted_pair(w, Q)


def spectral_norm(A: np.ndarray) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0.0
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    top = sym_eig(G).eigenvalues[0]
    return float(np.sqrt(max(top, 0.0)))


def slerp_path(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Great-circle interpolation of directions with linearly interpolated norm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"slerp endpoints differ in shape: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("slerp endpoint has zero norm")
    ua, ub = a / na, b / nb
    omega = float(np.arccos(np.clip(ua @ ub, -1.0, 1.0)))
    if np.pi - omega < 1e-8:
        raise AntipodalVectors("slerp endpoints are antipodal; great circle undefined")
    if t == 0:
        return a.copy()
    if t == 1:
        return b.copy()
    if omega < 1e-12:
        direction = ua
    else:
        direction = (np.sin((1 - t) * omega) * ua + np.sin(t * omega) * ub) / np.sin(omega)
        direction = direction / np.linalg.norm(direction)
    return ((1 - t) * na + t * nb) * direction
