"""Closed-form Bayesian linear regression: posterior, KL, exact Hamiltonian flow.

These are the ground-truth oracles the sampler and reparametrisation are
checked against. The model is ``y | theta ~ N(X theta, s2)`` with a
standard normal prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg


@dataclass(frozen=True)
class GaussianDist:
    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def standard(cls, d: int) -> "GaussianDist":
        return cls(np.zeros(d), np.eye(d))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def linear_posterior(X, y, noise: float) -> GaussianDist:
    if not noise > 0:
        raise ValueError("noise variance must be > 0")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    if math.isinf(noise):
        return GaussianDist.standard(d)
    A = np.eye(d) + X.T @ X / noise
    U = linalg.cholesky(A)
    Uinv = linalg.tri_solve(U, np.eye(d))
    cov = Uinv @ Uinv.T
    mean = linalg.cho_solve(U, X.T @ y) / noise
    return GaussianDist(mean, cov)


def gaussian_kl(p: GaussianDist, q: GaussianDist) -> float:
    """KL(p || q) for ``p`` standard normal."""
    d = q.dim
    if not (np.allclose(p.mean, 0.0) and np.allclose(p.cov, np.eye(d))):
        raise ValueError("gaussian_kl expects a standard normal first argument")
    U = linalg.cholesky(np.asarray(q.cov, dtype=float))
    Uinv = linalg.tri_solve(U, np.eye(d))
    w = linalg.tri_solve(U, q.mean, transposed=True)
    mean_term = float(np.sum(w * w))
    return float(0.5 * (np.sum(Uinv * Uinv) - d + mean_term + 2 * np.sum(np.log(np.diag(U)))))


def potential_terms(X, y, noise: float):
    """``C = I + X^T X / s2`` and ``b = X^T y / s2`` so that grad U = C theta - b."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    C = np.eye(X.shape[1]) + X.T @ X / noise
    return C, X.T @ np.asarray(y, dtype=float) / noise


def exact_hamiltonian_flow(C, b, z0, m0, t: float):
    """Exact solution of Hamilton's equations for ``U(z) = z^T C z / 2 - b^T z``.

    Returns ``(z_t, m_t)``; unit mass matrix.
    """
    C = np.asarray(C, dtype=float)
    linalg.cholesky(C)  # raises NotPositiveDefinite
    Q, lam = linalg.sym_eig(C)
    root = np.sqrt(lam)
    z_star = Q @ ((Q.T @ np.asarray(b, dtype=float)) / lam)
    dz = Q.T @ (np.asarray(z0, dtype=float) - z_star)
    m = Q.T @ np.asarray(m0, dtype=float)
    c, s = np.cos(t * root), np.sin(t * root)
    z_t = z_star + Q @ (c * dz + s / root * m)
    m_t = Q @ (-root * s * dz + c * m)
    return z_t, m_t


def hamiltonian(C, b, z, m) -> float:
    return float(0.5 * z @ C @ z - b @ z + 0.5 * m @ m)


def stepsize_bound(X, noise: float) -> float:
    """``(1 + ||X^T X||_2 / s2)^{-1/2}``: the leapfrog stepsize scale."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 1.0
    top = linalg.spectral_norm(np.atleast_2d(X)) ** 2
    return float((1.0 + top / noise) ** -0.5)
