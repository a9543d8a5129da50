"""Elementwise nonlinearities and their derivatives."""

import numpy as np
from scipy.special import erf, ndtr

from .errors import UnsupportedNonlinearity

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
NONLINEARITIES = ("gelu", "relu", "erf", "identity")


def activation(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "gelu":
        # exact x * Phi(x), not the tanh approximation
        return x * ndtr(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "erf":
        return erf(x)
    if kind == "identity":
        return np.array(x, copy=True)
    raise UnsupportedNonlinearity(f"unknown nonlinearity {kind!r}")


def activation_grad(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "gelu":
        return ndtr(x) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    if kind == "relu":
        return (x > 0).astype(float)  # derivative at exactly 0 is 0
    if kind == "erf":
        return (2.0 / np.sqrt(np.pi)) * np.exp(-x * x)
    if kind == "identity":
        return np.ones_like(x)
    raise UnsupportedNonlinearity(f"unknown nonlinearity {kind!r}")


def activation_and_grad(kind: str, x: np.ndarray):
    """``(psi(x), psi'(x))`` sharing the expensive transcendental work."""
    if kind == "gelu":
        cdf = ndtr(x)
        return x * cdf, cdf + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return activation(kind, x), activation_grad(kind, x)
