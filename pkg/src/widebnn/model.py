"""Fully-connected and residual MLPs in NTK parametrisation.

Every weight has a N(0, 1) prior; the fan-in scale ``sigma_w / sqrt(fan_in)``
is applied in the forward pass. The readout bias is folded into the
embedding as a constant column, so the readout block of the flat parameter
vector is the ``(D, d_out)`` matrix ``[W^{L+1}; b^{L+1}]`` with
``D = d^L + 1`` stored row-major at the tail of the vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFinite, ShapeMismatch
from .nonlin import NONLINEARITIES, activation, activation_and_grad


@dataclass(frozen=True)
class LayerSlot:
    w_offset: int
    fan_in: int
    fan_out: int
    b_offset: int

    @property
    def w_size(self) -> int:
        return self.fan_in * self.fan_out


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    widths: tuple
    output_dim: int = 1
    sigma_w: tuple = ()  # L + 1 entries, readout last
    sigma_b: tuple = ()  # L + 1 entries, readout last
    nonlinearity: str = "gelu"
    architecture: str = "plain"
    skip_c: float = 1.0
    layout: tuple = field(init=False, repr=False, compare=False)
    readout_offset: int = field(init=False, repr=False, compare=False)
    num_params: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        L = len(widths)
        if self.input_dim < 1 or self.output_dim < 1 or any(w < 1 for w in widths):
            raise ValueError("all widths must be >= 1")
        if len(self.sigma_w) != L + 1 or len(self.sigma_b) != L + 1:
            raise ValueError(f"need {L + 1} weight and bias scales, got {len(self.sigma_w)}, {len(self.sigma_b)}")
        if any(s <= 0 for s in self.sigma_w) or any(s < 0 for s in self.sigma_b):
            raise ValueError("sigma_w must be > 0 and sigma_b >= 0")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.architecture not in ("plain", "residual"):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.architecture == "residual":
            if len(set(widths)) > 1:
                raise ValueError("residual architecture requires equal hidden widths")
            if L % 2 != 1:
                raise ValueError("residual architecture needs 1 + 2*blocks hidden layers")
            if self.skip_c <= 0:
                raise ValueError("skip_c must be > 0")
        slots = []
        offset = 0
        fan_in = self.input_dim
        for w in widths:
            slots.append(LayerSlot(offset, fan_in, w, offset + fan_in * w))
            offset += fan_in * w + w
            fan_in = w
        object.__setattr__(self, "layout", tuple(slots))
        object.__setattr__(self, "readout_offset", offset)
        object.__setattr__(self, "num_params", offset + (fan_in + 1) * self.output_dim)

    @classmethod
    def fcn(
        cls,
        input_dim: int,
        widths,
        output_dim: int = 1,
        nonlinearity: str = "gelu",
        sigma_w2: float = 2.0,
        sigma_b2: float = 0.01,
        readout_sigma_w2: float = 1.0,
        readout_sigma_b2: float = 0.01,
        architecture: str = "plain",
        skip_c: float = 1.0,
    ) -> "NetworkSpec":
        """Spec with one shared hidden scale and a separate readout scale."""
        L = len(tuple(widths))
        sw = (math.sqrt(sigma_w2),) * L + (math.sqrt(readout_sigma_w2),)
        sb = (math.sqrt(sigma_b2),) * L + (math.sqrt(readout_sigma_b2),)
        return cls(input_dim, tuple(widths), output_dim, sw, sb, nonlinearity, architecture, skip_c)

    @classmethod
    def linear(cls, input_dim: int, output_dim: int = 1, bias_scale: float = 0.0) -> "NetworkSpec":
        """No hidden layers; weight scale sqrt(d) so the embedding rows are the raw inputs."""
        return cls(input_dim, (), output_dim, (math.sqrt(input_dim),), (float(bias_scale),))

    @property
    def depth(self) -> int:
        return len(self.widths)

    @property
    def embed_dim(self) -> int:
        """``D = d^L + 1``: embedding width including the constant column."""
        return (self.widths[-1] if self.widths else self.input_dim) + 1

    @property
    def readout_shape(self) -> tuple:
        return (self.embed_dim, self.output_dim)

    def readout(self, params: np.ndarray) -> np.ndarray:
        return params[self.readout_offset :].reshape(self.readout_shape)

    def hidden(self, params: np.ndarray) -> np.ndarray:
        return params[: self.readout_offset]

    def layer_params(self, params: np.ndarray, i: int):
        s = self.layout[i]
        W = params[s.w_offset : s.w_offset + s.w_size].reshape(s.fan_in, s.fan_out)
        b = params[s.b_offset : s.b_offset + s.fan_out]
        return W, b

    def skip_scales(self, k: int) -> tuple:
        """Skip and residual-branch multipliers for the k-th skip connection."""
        c = self.skip_c
        return math.sqrt((k - 1 + c) / (k + c)), math.sqrt(1.0 / (k + c))

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "widths": list(self.widths),
            "output_dim": self.output_dim,
            "sigma_w": list(self.sigma_w),
            "sigma_b": list(self.sigma_b),
            "nonlinearity": self.nonlinearity,
            "architecture": self.architecture,
            "skip_c": self.skip_c,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            int(d["input_dim"]),
            tuple(d["widths"]),
            int(d.get("output_dim", 1)),
            tuple(float(s) for s in d["sigma_w"]),
            tuple(float(s) for s in d["sigma_b"]),
            d.get("nonlinearity", "gelu"),
            d.get("architecture", "plain"),
            float(d.get("skip_c", 1.0)),
        )


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    noise: float  # observation variance sigma^2
    label: str = ""

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
            raise ShapeMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("dataset has non-finite entries")
        if not self.noise > 0:
            raise ValueError("noise variance must be > 0")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]


def init_prior(spec: NetworkSpec, seed) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal(spec.num_params)


def _check(spec: NetworkSpec, params: np.ndarray, X: np.ndarray):
    if params.shape != (spec.num_params,):
        raise ShapeMismatch(f"expected {spec.num_params} parameters, got {params.shape}")
    if X.ndim != 2 or X.shape[1] != spec.input_dim:
        raise ShapeMismatch(f"expected inputs with {spec.input_dim} columns, got {X.shape}")


def _dense(spec, params, i, h):
    W, b = spec.layer_params(params, i)
    s = spec.layout[i]
    return (spec.sigma_w[i] / math.sqrt(s.fan_in)) * (h @ W) + spec.sigma_b[i] * b


def hidden_forward(spec: NetworkSpec, params: np.ndarray, X: np.ndarray, need_grad: bool = True):
    """Top hidden features ``h^L`` plus a cache for :func:`hidden_backward`.

    The cache holds activation derivatives; with ``need_grad=False`` it is
    empty and only the forward pass is done.
    """
    psi = spec.nonlinearity

    def act(x):
        if need_grad:
            return activation_and_grad(psi, x)
        return activation(psi, x), None

    if spec.depth == 0:
        return X, []
    if spec.architecture == "plain":
        cache = []
        h = X
        for i in range(spec.depth):
            f = _dense(spec, params, i, h)
            h_next, g = act(f)
            cache.append((h, g))
            h = h_next
        return h, (cache if need_grad else [])
    z = _dense(spec, params, 0, X)
    cache = [X]
    for k in range(1, (spec.depth - 1) // 2 + 1):
        a, ga = act(z)
        u = _dense(spec, params, 2 * k - 1, a)
        v, gu = act(u)
        r = _dense(spec, params, 2 * k, v)
        cache.append((ga, a, gu, v))
        s_skip, s_res = spec.skip_scales(k)
        z = s_skip * z + s_res * r
    h, g_top = act(z)
    cache.append(g_top)
    return h, (cache if need_grad else [])


def _dense_backward(spec, params, i, h_in, df, grad):
    W, _ = spec.layer_params(params, i)
    s = spec.layout[i]
    c = spec.sigma_w[i] / math.sqrt(s.fan_in)
    grad[s.w_offset : s.w_offset + s.w_size] += c * (h_in.T @ df).ravel()
    grad[s.b_offset : s.b_offset + s.fan_out] += spec.sigma_b[i] * df.sum(axis=0)
    return c * (df @ W.T)


def hidden_backward(spec: NetworkSpec, params: np.ndarray, cache, dh: np.ndarray) -> np.ndarray:
    """Gradient of a scalar with respect to all hidden-layer parameters.

    ``dh`` is the gradient with respect to ``h^L``. Returns a vector of length
    ``spec.readout_offset``.
    """
    grad = np.zeros(spec.readout_offset)
    if spec.depth == 0:
        return grad
    if not cache:
        raise ValueError("hidden_backward needs a cache from hidden_forward(need_grad=True)")
    if spec.architecture == "plain":
        for i in range(spec.depth - 1, -1, -1):
            h_in, g = cache[i]
            df = dh * g
            dh = _dense_backward(spec, params, i, h_in, df, grad)
        return grad
    dz = dh * cache[-1]
    n_blocks = (spec.depth - 1) // 2
    for k in range(n_blocks, 0, -1):
        ga, a, gu, v = cache[k]
        s_skip, s_res = spec.skip_scales(k)
        dr = s_res * dz
        dv = _dense_backward(spec, params, 2 * k, v, dr, grad)
        du = dv * gu
        da = _dense_backward(spec, params, 2 * k - 1, a, du, grad)
        dz = s_skip * dz + da * ga
    _dense_backward(spec, params, 0, cache[0], dz, grad)
    return grad


def embedding(spec: NetworkSpec, h: np.ndarray) -> np.ndarray:
    """Scaled readout embedding ``[sigma_w h / sqrt(d^L), sigma_b 1]``."""
    d_last = h.shape[1]
    out = np.empty((h.shape[0], d_last + 1))
    out[:, :d_last] = (spec.sigma_w[-1] / math.sqrt(d_last)) * h
    out[:, d_last] = spec.sigma_b[-1]
    return out


def forward(spec: NetworkSpec, params: np.ndarray, X: np.ndarray):
    """Network outputs ``F`` (n x d_out) and the embedding matrix ``Psi``."""
    params = np.asarray(params, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check(spec, params, X)
    h, _ = hidden_forward(spec, params, X, need_grad=False)
    Psi = embedding(spec, h)
    return Psi @ spec.readout(params), Psi


def predict(spec: NetworkSpec, params: np.ndarray, X: np.ndarray) -> np.ndarray:
    return forward(spec, params, X)[0]


def log_post_standard(spec: NetworkSpec, params: np.ndarray, data: Dataset):
    """Unnormalised log posterior in the standard parametrisation and its gradient."""
    params = np.asarray(params, dtype=float)
    _check(spec, params, data.X)
    h, cache = hidden_forward(spec, params, data.X)
    Psi = embedding(spec, h)
    Wout = spec.readout(params)
    resid = data.Y - Psi @ Wout
    value = -0.5 * params @ params - 0.5 * np.sum(resid * resid) / data.noise
    dF = resid / data.noise
    grad = -params.copy()
    grad[spec.readout_offset :] += (Psi.T @ dF).ravel()
    if spec.depth > 0:
        d_last = h.shape[1]
        dh = (spec.sigma_w[-1] / math.sqrt(d_last)) * (dF @ Wout[:d_last].T)
        grad[: spec.readout_offset] += hidden_backward(spec, params, cache, dh)
    return float(value), grad


def standard_target(spec: NetworkSpec, data: Dataset):
    """``theta -> (log density, gradient)`` for the sampler."""

    def target(theta):
        return log_post_standard(spec, theta, data)

    return target


def gd_find_mode(spec: NetworkSpec, theta0: np.ndarray, data: Dataset, lr: float, steps: int) -> np.ndarray:
    """Full-batch gradient ascent on the standard log posterior."""
    if not lr > 0:
        raise ValueError("lr must be > 0")
    theta = np.array(theta0, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            value, grad = log_post_standard(spec, theta, data)
            theta = theta + lr * grad
            if not (np.isfinite(value) and np.all(np.isfinite(theta))):
                raise NonFinite("gradient ascent diverged; reduce the learning rate")
    return theta
