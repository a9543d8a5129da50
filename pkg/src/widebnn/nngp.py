"""Empirical and analytic NNGP kernels and GP regression helpers."""

from __future__ import annotations

import math

import numpy as np

from . import linalg
from .errors import UnsupportedNonlinearity
from .model import NetworkSpec


def empirical_kernel(Psi: np.ndarray) -> np.ndarray:
    Psi = np.asarray(Psi, dtype=float)
    return Psi @ Psi.T


def _gauss_expectation(K: np.ndarray, kind: str) -> np.ndarray:
    """``E[psi(u) psi(v)]`` for ``(u, v)`` jointly Gaussian with covariance ``K``."""
    diag = np.clip(np.diag(K), 0.0, None)
    if kind == "relu":
        norms = np.sqrt(np.outer(diag, diag))
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = np.where(norms > 0, K / norms, 1.0)
        angle = np.arccos(np.clip(cos, -1.0, 1.0))
        return norms * (np.sin(angle) + (np.pi - angle) * np.cos(angle)) / (2 * np.pi)
    if kind == "erf":
        denom = np.sqrt(np.outer(1 + 2 * diag, 1 + 2 * diag))
        return (2 / np.pi) * np.arcsin(np.clip(2 * K / denom, -1.0, 1.0))
    raise UnsupportedNonlinearity(f"no closed-form kernel for {kind!r}")


def kernel_recursion(K0: np.ndarray, sigma_w, sigma_b, kind: str) -> np.ndarray:
    """Push a first-layer pre-activation kernel through the remaining layers.

    ``sigma_w[i]``/``sigma_b[i]`` scale the i-th layer after the first.
    Weight scales may be zero here (the degenerate constant-kernel case).
    """
    K = np.asarray(K0, dtype=float)
    for sw, sb in zip(sigma_w, sigma_b):
        K = sw * sw * _gauss_expectation(K, kind) + sb * sb
    return K


def analytic_kernel(spec: NetworkSpec, X: np.ndarray, X2: np.ndarray | None = None) -> np.ndarray:
    """Infinite-width readout kernel of a plain ReLU or erf network.

    With ``X2`` the cross kernel ``k(X, X2)`` is returned.
    """
    if spec.architecture != "plain":
        raise UnsupportedNonlinearity("analytic kernels only for the plain architecture")
    if spec.nonlinearity not in ("relu", "erf") and spec.depth > 0:
        raise UnsupportedNonlinearity(f"no closed-form kernel for {spec.nonlinearity!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = X if X2 is None else np.vstack([X, np.atleast_2d(np.asarray(X2, dtype=float))])
    K0 = spec.sigma_w[0] ** 2 * (Z @ Z.T) / spec.input_dim + spec.sigma_b[0] ** 2
    K = kernel_recursion(K0, spec.sigma_w[1:], spec.sigma_b[1:], spec.nonlinearity)
    if X2 is None:
        return K
    return K[: X.shape[0], X.shape[0] :]


def analytic_kernel_diag(spec: NetworkSpec, X: np.ndarray) -> np.ndarray:
    """``k(x, x)`` for each row, without forming the full matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.array([analytic_kernel(spec, x[None])[0, 0] for x in X])


def gp_posterior(K_train, K_cross, k_test_diag, y, noise: float):
    """Posterior predictive mean and marginal variance of GP regression."""
    if not noise > 0:
        raise ValueError("noise variance must be > 0")
    K_train = np.asarray(K_train, dtype=float)
    K_cross = np.atleast_2d(np.asarray(K_cross, dtype=float))
    A = K_train.copy()
    A[np.diag_indices_from(A)] += noise
    U = linalg.cholesky(A)
    mean = K_cross @ linalg.cho_solve(U, np.asarray(y, dtype=float))
    V = linalg.tri_solve(U, K_cross.T, transposed=True)
    var = np.asarray(k_test_diag, dtype=float) - np.sum(V * V, axis=0)
    return mean, var


def kl_prior_limit(K: np.ndarray, y: np.ndarray, noise: float) -> float:
    """Large-width limit of KL(N(0, I) || weight posterior).

    ``0.5 [tr(K)/s2 + ||y||^2_{I/s2 - (K + s2 I)^-1} - log det((K + s2 I)/s2)]``
    summed over output columns of ``y``.
    """
    if not noise > 0:
        raise ValueError("noise variance must be > 0")
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    Y = y[:, None] if y.ndim == 1 else y
    n, d_out = Y.shape
    Ks = K + noise * np.eye(n)
    U = linalg.cholesky(Ks)
    logdet = 2 * np.sum(np.log(np.diag(U))) - n * math.log(noise)
    quad = np.sum(Y * Y) / noise - np.sum(Y * linalg.cho_solve(U, Y))
    return float(0.5 * (d_out * np.trace(K) / noise + quad - d_out * logdet))
