"""Effective sample size and R-hat^2 over random 1-d projections.

ESS truncates the autocorrelation sum at the first negative lag estimate;
R-hat^2 uses population (1/N) moments throughout. Both run on thinned
samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConstantSeries, DegenerateChains, DimensionMismatch


def autocovariance(x: np.ndarray, method: str = "fft", max_lag: Optional[int] = None) -> np.ndarray:
    """Lag-k autocovariances ``(1/S) sum_i (x_i - mean)(x_{i+k} - mean)``."""
    x = np.asarray(x, dtype=float)
    S = x.shape[-1]
    xc = x - x.mean(axis=-1, keepdims=True)
    max_lag = S if max_lag is None else min(max_lag, S)
    if method == "fft":
        nfft = 1 << int(np.ceil(np.log2(2 * S)))
        f = np.fft.rfft(xc, n=nfft, axis=-1)
        return np.fft.irfft(f * np.conj(f), n=nfft, axis=-1)[..., :max_lag] / S
    if method == "direct":
        out = np.empty(xc.shape[:-1] + (max_lag,))
        for k in range(max_lag):
            out[..., k] = np.sum(xc[..., : S - k] * xc[..., k:], axis=-1) / S
        return out
    raise ValueError(f"unknown method {method!r}")


def _ess_from_rho(rho: np.ndarray, S: int) -> float:
    neg = np.nonzero(rho[1:] < 0)[0]
    K = neg[0] + 1 if neg.size else S
    k = np.arange(1, K)
    denom = 1.0 + 2.0 * np.sum((1.0 - k / S) * rho[1:K])
    return float(min(S / denom, S))


def _direct_truncated_rho(xc: np.ndarray) -> np.ndarray:
    # lags computed one at a time, stopping at the first negative estimate
    M, S = xc.shape
    c0 = np.mean(np.sum(xc * xc, axis=1))
    rho = [1.0]
    for k in range(1, S):
        ck = np.mean(np.sum(xc[:, : S - k] * xc[:, k:], axis=1))
        rho.append(ck / c0)
        if rho[-1] < 0:
            break
    return np.array(rho)


def ess(series, method: str = "fft") -> float:
    """Effective sample size of one series (or of M chains given as M x S).

    With several chains the lag autocovariances are averaged across chains
    before normalising, and the result is on the per-chain scale, so
    ``ess / S`` is the per-step ESS.
    """
    x = np.atleast_2d(np.asarray(series, dtype=float))
    M, S = x.shape
    if S < 4:
        raise ValueError("need at least 4 samples")
    xc = x - x.mean(axis=1, keepdims=True)
    if np.all(np.sum(xc * xc, axis=1) <= 0.0):
        raise ConstantSeries("series has zero variance")
    if method == "direct":
        return _ess_from_rho(_direct_truncated_rho(xc), S)
    acov = autocovariance(xc, method="fft").mean(axis=0)
    return _ess_from_rho(acov / acov[0], S)


def rhat(chains) -> float:
    """Squared potential scale reduction (pooled over within-chain variance)."""
    z = np.asarray(chains, dtype=float)
    if z.ndim != 2 or z.shape[0] < 2 or z.shape[1] < 2:
        raise DimensionMismatch("rhat needs an (M >= 2, S >= 2) array")
    within = z.var(axis=1).mean()
    if within <= 0.0:
        raise DegenerateChains("all within-chain variances are zero")
    between = z.mean(axis=1).var()
    return float((within + between) / within)


def rhat_per_dim(samples: np.ndarray) -> np.ndarray:
    """R-hat^2 for every coordinate of an (M, S, dim) array."""
    z = np.asarray(samples, dtype=float)
    within = z.var(axis=1).mean(axis=0)
    between = z.mean(axis=1).var(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(within > 0, (within + between) / within, np.nan)


@dataclass(frozen=True)
class ProjectionSet:
    directions: np.ndarray  # (k, dim), unit rows
    seed: int

    @property
    def count(self) -> int:
        return self.directions.shape[0]


def make_projections(dim: int, k: int = 100, seed: int = 0) -> ProjectionSet:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    G = np.random.default_rng(seed).standard_normal((k, dim))
    return ProjectionSet(G / np.linalg.norm(G, axis=1, keepdims=True), seed)


def _ess_summary(per_step: np.ndarray, raw: np.ndarray) -> dict:
    return {
        "min": float(per_step.min()),
        "mean": float(per_step.mean()),
        "max": float(per_step.max()),
        "per_projection": [float(v) for v in per_step],
        "raw_per_projection": [float(v) for v in raw],
    }


def projected_ess(samples: np.ndarray, projections: ProjectionSet) -> np.ndarray:
    """Raw ESS of each projection for an (M, S, dim) sample array."""
    proj = samples @ projections.directions.T  # (M, S, k)
    out = np.empty(projections.count)
    for j in range(projections.count):
        try:
            out[j] = ess(proj[:, :, j])
        except ConstantSeries:
            out[j] = np.nan
    return out


@dataclass
class DiagnosticsReport:
    num_samples: int
    num_chains: int
    ess_theta: dict
    acceptance: dict
    config: dict = field(default_factory=dict)
    ess_f_test: Optional[dict] = None
    rhat: Optional[dict] = None

    def to_dict(self) -> dict:
        out = {"config": self.config, "ess": {"theta": self.ess_theta}}
        if self.ess_f_test is not None:
            out["ess"]["f_test"] = self.ess_f_test
        if self.rhat is not None:
            out["rhat"] = self.rhat
        out["acceptance"] = self.acceptance
        out["runtime"] = {"num_chains": self.num_chains, "thinned_samples_per_chain": self.num_samples}
        return out


def _rhat_summary(values: np.ndarray) -> dict:
    v = values[np.isfinite(values)]
    qs = [0.0, 0.5, 0.9, 0.99, 1.0]
    return {
        "per_dim_quantiles": {f"q{int(q * 100):02d}": float(np.quantile(v, q)) for q in qs},
        "mean": float(v.mean()),
        "max": float(v.max()),
    }


def summarize(
    stores: Sequence,
    projections: ProjectionSet,
    test_predictions: Optional[Sequence[np.ndarray]] = None,
    config: Optional[dict] = None,
) -> DiagnosticsReport:
    """ESS over projections (pooled across chains) plus per-dim R-hat^2.

    ``test_predictions`` holds, per store, an (S, m) array of function values
    at test points; they get their own projection set.
    """
    if not stores:
        raise ValueError("no sample stores")
    S = stores[0].num_samples
    dim = stores[0].dim
    if any(s.num_samples != S or s.dim != dim for s in stores):
        raise DimensionMismatch("stores differ in sample count or dimension")
    if projections.directions.shape[1] != dim:
        raise DimensionMismatch("projection dimension does not match samples")
    samples = np.stack([s.positions for s in stores])
    raw = projected_ess(samples, projections)
    report = DiagnosticsReport(
        num_samples=S,
        num_chains=len(stores),
        ess_theta=_ess_summary(raw / S, raw),
        acceptance={
            "mean_post_burnin": float(np.mean([s.mean_acceptance for s in stores])),
            "per_chain": [float(s.mean_acceptance) for s in stores],
        },
        config=dict(config or stores[0].config),
    )
    if test_predictions is not None:
        preds = np.stack([np.asarray(p, dtype=float).reshape(S, -1) for p in test_predictions])
        fproj = make_projections(preds.shape[2], projections.count, projections.seed + 1)
        fraw = projected_ess(preds, fproj)
        report.ess_f_test = _ess_summary(fraw / S, fraw)
    if len(stores) >= 2:
        report.rhat = _rhat_summary(rhat_per_dim(samples))
    return report
