"""Repriorisation: the data-dependent map ``theta = T(phi)`` and its density.

Only the readout block changes. For fixed pre-readout weights the readout
posterior is Gaussian with covariance ``lam (lam I + Psi^T Psi)^-1`` (exact at
``lam = sigma^2``) and ``T`` maps a standard normal onto it:

    theta_out = U^-1 [U^-T Psi^T Y + sqrt(lam) phi_out],   U^T U = lam I + Psi^T Psi

One Cholesky factor serves every output column, the mean and the Jacobian
log-determinant ``d_out * (D log sqrt(lam) - sum log U_ii)``.

Two independent routes give the log density of ``phi``:

* ``general`` -- ``log p(T(phi) | D) + log|det dT|`` differentiated by the
  reverse-mode engine through the Cholesky factorisation; valid for any lam.
* ``marginal`` -- at ``lam = sigma^2`` the readout block is exactly standard
  normal and the rest carries the GP marginal likelihood of the empirical
  kernel ``K = sigma^2 I + Psi Psi^T``; hand-written backprop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff, linalg
from .errors import PathUnavailable, ShapeMismatch, TooFewSamples
from .model import Dataset, NetworkSpec, embedding, hidden_backward, hidden_forward
from .linalg import EigenPair

STANDARD = math.inf  # lam sentinel: T is the identity


@dataclass(frozen=True)
class ReparamConfig:
    lam: Optional[float] = None  # None -> the observation variance
    space: str = "feature"  # or "data"
    data_method: str = "eigen"  # data space: "eigen" (symmetric root) or "structured"

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.space not in ("feature", "data"):
            raise ValueError(f"unknown space {self.space!r}")
        if self.data_method not in ("eigen", "structured"):
            raise ValueError(f"unknown data-space method {self.data_method!r}")

    def resolve(self, noise: float) -> float:
        return noise if self.lam is None else float(self.lam)

    def is_exact(self, noise: float) -> bool:
        return math.isclose(self.resolve(noise), noise, rel_tol=1e-12)


@dataclass
class ReparamFactorization:
    Psi: np.ndarray
    mu: np.ndarray  # (D, d_out)
    log_abs_det: float
    lam: float
    U: Optional[np.ndarray] = None  # feature space
    eig: Optional[EigenPair] = None  # data space, of lam I_n + Psi Psi^T
    generators: Optional[tuple] = None  # structured data space (d, G)


def _embed(spec: NetworkSpec, phi: np.ndarray, X: np.ndarray) -> np.ndarray:
    h, _ = hidden_forward(spec, phi, X, need_grad=False)
    return embedding(spec, h)


def _with_readout(spec: NetworkSpec, phi: np.ndarray, readout: np.ndarray) -> np.ndarray:
    theta = np.array(phi, dtype=float)
    theta[spec.readout_offset :] = readout.ravel()
    return theta


def factorize(spec: NetworkSpec, phi: np.ndarray, data: Dataset, cfg: ReparamConfig) -> ReparamFactorization:
    """Feature-space factorisation for the pre-readout weights in ``phi``."""
    lam = cfg.resolve(data.noise)
    Psi = _embed(spec, phi, data.X)
    D = Psi.shape[1]
    if math.isinf(lam):
        return ReparamFactorization(Psi, np.zeros(spec.readout_shape), 0.0, lam, U=np.eye(D))
    A = Psi.T @ Psi
    A[np.diag_indices(D)] += lam
    U = linalg.cholesky(A)
    mu = linalg.cho_solve(U, Psi.T @ data.Y)
    log_abs_det = spec.output_dim * (D * 0.5 * math.log(lam) - np.sum(np.log(np.diag(U))))
    return ReparamFactorization(Psi, mu, float(log_abs_det), lam, U=U)


def repriorise(spec: NetworkSpec, phi: np.ndarray, data: Dataset, cfg: ReparamConfig = ReparamConfig()):
    """``theta = T(phi)`` and the factorisation it was computed from."""
    phi = np.asarray(phi, dtype=float)
    if cfg.space == "data":
        return repriorise_data_space(spec, phi, data, cfg)
    fact = factorize(spec, phi, data, cfg)
    if math.isinf(fact.lam):
        return phi.copy(), fact
    phi_out = spec.readout(phi)
    U = fact.U
    V = linalg.tri_solve(U, fact.Psi.T @ data.Y, transposed=True)
    theta_out = linalg.tri_solve(U, V + math.sqrt(fact.lam) * phi_out)
    return _with_readout(spec, phi, theta_out), fact


def inverse_repriorise(spec: NetworkSpec, theta: np.ndarray, data: Dataset, cfg: ReparamConfig = ReparamConfig()):
    theta = np.asarray(theta, dtype=float)
    fact = factorize(spec, theta, data, cfg)
    if math.isinf(fact.lam):
        return theta.copy()
    U = fact.U
    V = linalg.tri_solve(U, fact.Psi.T @ data.Y, transposed=True)
    phi_out = (U @ spec.readout(theta) - V) / math.sqrt(fact.lam)
    return _with_readout(spec, theta, phi_out)


# -- data space ------------------------------------------------------------


def sqrt_woodbury(A: np.ndarray) -> np.ndarray:
    """``(I_p + A^T A)^{1/2}`` from an m x m square root:

    ``I_p + A^T [I_m + (I_m + A A^T)^{1/2}]^{-1} A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, p = A.shape
    Q, w = linalg.sym_eig(np.eye(m) + A @ A.T)
    inner = (Q / (1.0 + np.sqrt(np.maximum(w, 0.0)))) @ Q.T
    return np.eye(p) + A.T @ inner @ A


def structured_cholesky(Psi: np.ndarray, lam: float):
    """Generators of the Cholesky factor of ``lam I_D + Psi^T Psi``.

    With ``W = Psi^T`` (D x n) the LDL^T factor is ``L = I + strict_lower(W G^T)``
    and ``U = diag(sqrt(d)) L^T``; returns ``(d, G)``. Costs O(D n^2) time and
    O(D n) memory, so it never forms a D x D matrix.
    """
    W = Psi.T
    D, n = W.shape
    S = np.eye(n)
    d = np.empty(D)
    G = np.empty((D, n))
    for i in range(D):
        Sw = S @ W[i]
        d[i] = lam + W[i] @ Sw
        G[i] = Sw / d[i]
        S -= np.outer(Sw, G[i])
    return d, G


def _structured_solve_upper(W, d, G, B):
    # U x = B with U = diag(sqrt d) L^T: back substitution with a running sum
    D = W.shape[0]
    X = np.empty_like(B)
    s = np.zeros((W.shape[1], B.shape[1]))
    sq = np.sqrt(d)
    for i in range(D - 1, -1, -1):
        X[i] = B[i] / sq[i] - G[i] @ s
        s += np.outer(W[i], X[i])
    return X


def _structured_solve_lower(W, d, G, C):
    # U^T y = C, forward substitution
    D = W.shape[0]
    Y = np.empty_like(C)
    t = np.zeros((W.shape[1], C.shape[1]))
    sq = np.sqrt(d)
    for i in range(D):
        Y[i] = (C[i] - W[i] @ t) / sq[i]
        t += np.outer(G[i], sq[i] * Y[i])
    return Y


def repriorise_data_space(spec: NetworkSpec, phi: np.ndarray, data: Dataset, cfg: ReparamConfig = ReparamConfig()):
    """``T(phi)`` with cost cubic in n rather than in the embedding width.

    ``data_method="eigen"`` uses the symmetric square root of the readout
    covariance via an eigendecomposition of ``lam I_n + Psi Psi^T``; it shares
    the mean and Jacobian determinant with the feature-space map but its
    linear part differs from ``sqrt(lam) U^-1`` by an orthogonal factor.
    ``"structured"`` reproduces the feature-space map exactly from the
    generators of :func:`structured_cholesky`.
    """
    phi = np.asarray(phi, dtype=float)
    lam = cfg.resolve(data.noise)
    Psi = _embed(spec, phi, data.X)
    n, D = Psi.shape
    d_out = spec.output_dim
    if math.isinf(lam):
        return phi.copy(), ReparamFactorization(Psi, np.zeros(spec.readout_shape), 0.0, lam)
    phi_out = spec.readout(phi)
    if cfg.data_method == "structured":
        d, G = structured_cholesky(Psi, lam)
        W = Psi.T
        V = _structured_solve_lower(W, d, G, W @ data.Y)
        mu = _structured_solve_upper(W, d, G, V)
        theta_out = _structured_solve_upper(W, d, G, V + math.sqrt(lam) * phi_out)
        log_abs_det = d_out * (D * 0.5 * math.log(lam) - 0.5 * np.sum(np.log(d)))
        fact = ReparamFactorization(Psi, mu, float(log_abs_det), lam, generators=(d, G))
        return _with_readout(spec, phi, theta_out), fact
    K = Psi @ Psi.T
    K[np.diag_indices(n)] += lam
    eig = linalg.sym_eig(K)
    Q, w = eig
    mu = Psi.T @ ((Q / w) @ (Q.T @ data.Y))
    coef = 1.0 / (np.sqrt(w) * (math.sqrt(lam) + np.sqrt(w)))
    theta_out = mu + phi_out - Psi.T @ ((Q * coef) @ (Q.T @ (Psi @ phi_out)))
    log_abs_det = d_out * (n * 0.5 * math.log(lam) - 0.5 * np.sum(np.log(w)))
    fact = ReparamFactorization(Psi, mu, float(log_abs_det), lam, eig=eig)
    return _with_readout(spec, phi, theta_out), fact


# -- log densities -----------------------------------------------------------


def build_general_program(spec: NetworkSpec, data: Dataset, lam: float) -> autodiff.GradientProgram:
    """Graph of ``log p(T(phi) | D) + log|det dT|`` over named layer inputs."""
    p = autodiff.GradientProgram()
    X = p.constant(data.X)
    Y = p.constant(data.Y)
    n = data.n
    psi = spec.nonlinearity
    weights = []

    def dense(i, h):
        s = spec.layout[i]
        W = p.input(f"W{i}", (s.fan_in, s.fan_out))
        b = p.input(f"b{i}", (s.fan_out,))
        weights.extend([W, b])
        lin = p.scale(p.matmul(h, W), spec.sigma_w[i] / math.sqrt(s.fan_in))
        return p.add(lin, p.scale(b, spec.sigma_b[i]))

    if spec.depth == 0:
        h = X
    elif spec.architecture == "plain":
        h = X
        for i in range(spec.depth):
            h = p.nonlin(dense(i, h), psi)
    else:
        z = dense(0, X)
        for k in range(1, (spec.depth - 1) // 2 + 1):
            v = p.nonlin(dense(2 * k - 1, p.nonlin(z, psi)), psi)
            r = dense(2 * k, v)
            s_skip, s_res = spec.skip_scales(k)
            z = p.add(p.scale(z, s_skip), p.scale(r, s_res))
        h = p.nonlin(z, psi)
    d_last = spec.embed_dim - 1
    D = spec.embed_dim
    Psi = p.concat_columns(
        p.scale(h, spec.sigma_w[-1] / math.sqrt(d_last)),
        p.constant(np.full((n, 1), spec.sigma_b[-1])),
    )
    phi_out = p.input("phi_out", spec.readout_shape)
    U = p.cholesky(p.add(p.matmul(Psi, Psi, transpose_a=True), p.constant(lam * np.eye(D))))
    V = p.tri_solve(U, p.matmul(Psi, Y, transpose_a=True), transposed=True)
    theta_out = p.tri_solve(U, p.add(V, p.scale(phi_out, math.sqrt(lam))))
    resid = p.add(p.matmul(Psi, theta_out), p.scale(Y, -1.0))
    log_lik = p.scale(p.sum_of_squares(resid), -0.5 / data.noise)
    log_prior = p.scale(p.sum(p.sum_of_squares(theta_out), *[p.sum_of_squares(w) for w in weights]), -0.5)
    d_out = spec.output_dim
    log_det = p.add(
        p.scale(p.sum_log_diag(U), -float(d_out)),
        p.constant(d_out * D * 0.5 * math.log(lam)),
    )
    return p.set_output(p.sum(log_lik, log_prior, log_det))


def _program_inputs(spec: NetworkSpec, phi: np.ndarray) -> dict:
    inputs = {}
    for i in range(spec.depth):
        W, b = spec.layer_params(phi, i)
        inputs[f"W{i}"] = W
        inputs[f"b{i}"] = b
    inputs["phi_out"] = spec.readout(phi)
    return inputs


def _flatten_grads(spec: NetworkSpec, grads: dict) -> np.ndarray:
    out = np.empty(spec.num_params)
    for i, s in enumerate(spec.layout):
        out[s.w_offset : s.w_offset + s.w_size] = grads[f"W{i}"].ravel()
        out[s.b_offset : s.b_offset + s.fan_out] = grads[f"b{i}"]
    out[spec.readout_offset :] = grads["phi_out"].ravel()
    return out


def _general(spec, phi, data, lam, prog=None):
    if math.isinf(lam):
        from .model import log_post_standard

        return log_post_standard(spec, phi, data)
    prog = prog or build_general_program(spec, data, lam)
    inputs = _program_inputs(spec, phi)
    value, grads = autodiff.value_and_gradient(prog, inputs, list(inputs))
    return value, _flatten_grads(spec, grads)


def _marginal(spec, phi, data, space="auto"):
    """Readout block standard normal times the GP evidence of the empirical kernel."""
    h, cache = hidden_forward(spec, phi, data.X)
    Psi = embedding(spec, h)
    n, D = Psi.shape
    s2 = data.noise
    d_out = spec.output_dim
    Y = data.Y
    if space == "auto":
        space = "data" if n <= D else "feature"
    if space == "data":
        K = Psi @ Psi.T
        K[np.diag_indices(n)] += s2
        Uk = linalg.cholesky(K)
        logdet_K = 2.0 * np.sum(np.log(np.diag(Uk)))
        Uinv = linalg.tri_solve(Uk, np.eye(n))
        Kinv = Uinv @ Uinv.T
        R = Kinv @ Y
        Kinv_Psi = Kinv @ Psi
    else:
        A = Psi.T @ Psi
        A[np.diag_indices(D)] += s2
        Ua = linalg.cholesky(A)
        logdet_K = 2.0 * np.sum(np.log(np.diag(Ua))) + (n - D) * math.log(s2)
        mu = linalg.cho_solve(Ua, Psi.T @ Y)
        R = (Y - Psi @ mu) / s2
        Kinv_Psi = linalg.cho_solve(Ua, Psi.T).T  # push-through identity
    value = -0.5 * (phi @ phi) - 0.5 * d_out * logdet_K - 0.5 * np.sum(Y * R)
    grad = -np.array(phi, dtype=float)
    if spec.depth > 0:
        d_last = D - 1
        dPsi = R @ (R.T @ Psi[:, :d_last]) - d_out * Kinv_Psi[:, :d_last]
        dh = (spec.sigma_w[-1] / math.sqrt(d_last)) * dPsi
        grad[: spec.readout_offset] += hidden_backward(spec, phi, cache, dh)
    return float(value), grad


def log_density_reparam(
    spec: NetworkSpec,
    phi: np.ndarray,
    data: Dataset,
    cfg: ReparamConfig = ReparamConfig(),
    path: str = "general",
):
    """Unnormalised ``log p(phi | D)`` and its gradient.

    Additive constants differ between paths; compare differences only.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (spec.num_params,):
        raise ShapeMismatch(f"expected {spec.num_params} parameters, got {phi.shape}")
    if path == "general":
        return _general(spec, phi, data, cfg.resolve(data.noise))
    if path == "marginal":
        if not cfg.is_exact(data.noise):
            raise PathUnavailable("the marginal path needs lam equal to the observation variance")
        return _marginal(spec, phi, data)
    raise ValueError(f"unknown path {path!r}")


def delta_phi(spec: NetworkSpec, phi: np.ndarray, data: Dataset, cfg: ReparamConfig = ReparamConfig()):
    """Score discrepancy ``-phi - grad log p(phi | D)`` and its norm."""
    phi = np.asarray(phi, dtype=float)
    _, grad = log_density_reparam(spec, phi, data, cfg, path="marginal")
    delta = -phi - grad
    return delta, float(np.linalg.norm(delta))


class RepriorisedTarget:
    """Sampler target over ``phi``; ``to_theta`` maps samples back to weights."""

    def __init__(self, spec: NetworkSpec, data: Dataset, cfg: ReparamConfig = ReparamConfig(), path: str = "auto"):
        self.spec, self.data, self.cfg = spec, data, cfg
        lam = cfg.resolve(data.noise)
        if path == "auto":
            path = "marginal" if cfg.is_exact(data.noise) else "general"
        if path == "marginal" and not cfg.is_exact(data.noise):
            raise PathUnavailable("the marginal path needs lam equal to the observation variance")
        self.path = path
        self._prog = build_general_program(spec, data, lam) if path == "general" and not math.isinf(lam) else None

    def __call__(self, phi):
        if self.path == "marginal":
            return _marginal(self.spec, phi, self.data)
        return _general(self.spec, phi, self.data, self.cfg.resolve(self.data.noise), self._prog)

    def to_theta(self, phi):
        return repriorise(self.spec, phi, self.data, self.cfg)[0]


# -- convergence witness -------------------------------------------------------


def _energy_distance_to_std_normal(x: np.ndarray) -> float:
    from scipy.special import ndtr

    n = x.size
    pdf = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    e_xy = np.mean(2 * pdf + x * (2 * ndtr(x) - 1))  # E|x - Z|, Z ~ N(0, 1)
    xs = np.sort(x)
    e_xx = 2.0 * np.sum((2 * np.arange(1, n + 1) - n - 1) * xs) / (n * n)
    return float(2 * e_xy - e_xx - 2 / math.sqrt(math.pi))


def kl_gaussian_reference_stats(samples: np.ndarray) -> dict:
    """Moment and energy-distance comparison of projected samples with N(0, 1).

    ``samples`` is (N, k): N draws of k projections. Not a KL estimate.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] < 100:
        raise TooFewSamples(f"need at least 100 samples, got {samples.shape[0]}")
    mean = samples.mean(axis=0)
    var = samples.var(axis=0)
    degenerate = var <= 1e-300
    centred = samples - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        kurt = np.where(degenerate, np.nan, np.mean(centred**4, axis=0) / var**2 - 3.0)
    energy = np.array([_energy_distance_to_std_normal(samples[:, j]) for j in range(samples.shape[1])])
    return {
        "mean": mean,
        "variance": var,
        "excess_kurtosis": kurt,
        "energy_distance": energy,
        "degenerate": degenerate,
    }
