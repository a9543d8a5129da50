"""Experiment plumbing shared by the CLI, the scripts and the tests.

Builds datasets, specs and targets from an :class:`ExperimentConfig`, tunes
stepsizes for a target acceptance rate, runs chains, times steps and lays
out log-density slices.
"""

from __future__ import annotations

import copy
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import data as datasets
from . import diagnostics, linalg
from .config import DataConfig, ExperimentConfig, NetworkConfig
from .errors import DimensionMismatch, NonFiniteDensity
from .model import Dataset, NetworkSpec, log_post_standard, predict, standard_target
from .reprior import ReparamConfig, RepriorisedTarget, inverse_repriorise, log_density_reparam
from .sampler import ChainState, LmcConfig, lmc_step, run_chains

ACCEPTANCE_FLOOR = 0.98


# -- construction ------------------------------------------------------------


def make_dataset(dc: DataConfig, noise: float):
    """``(train Dataset, test inputs or None)``."""
    if dc.source == "synthetic-1d":
        train = datasets.synthetic_1d(noise)
        X_test = np.linspace(-2.0, 2.0, dc.test_points)[:, None] if dc.test_points else None
        return train, X_test
    if dc.source == "gaussian-blobs":
        full = datasets.gaussian_blobs(dc.n + dc.test_points, dc.input_dim, dc.num_classes, dc.seed, noise)
        if not dc.test_points:
            return full, None
        train = Dataset(full.X[: dc.n], full.Y[: dc.n], noise, full.label)
        return train, full.X[dc.n :]
    if dc.source == "linear":
        train = datasets.linear_regression(dc.n + dc.test_points, dc.input_dim, dc.seed, noise)
        if not dc.test_points:
            return train, None
        return Dataset(train.X[: dc.n], train.Y[: dc.n], noise, train.label), train.X[dc.n :]
    if dc.source == "csv":
        train = datasets.load_csv(dc.path, noise, dc.mode, dc.label_column, target_columns=dc.target_columns)
        return train, None
    raise ValueError(f"unknown data source {dc.source!r}")


def make_spec(nc: NetworkConfig, data: Dataset, widths=None) -> NetworkSpec:
    widths = nc.widths if widths is None else widths
    return NetworkSpec.fcn(
        data.X.shape[1],
        tuple(widths),
        data.Y.shape[1],
        nc.nonlinearity,
        nc.sigma_w2,
        nc.sigma_b2,
        nc.readout_sigma_w2,
        nc.readout_sigma_b2,
        nc.architecture,
        nc.skip_c,
    )


def make_target(spec: NetworkSpec, data: Dataset, parametrisation: str, lam=None, path: str = "auto"):
    """``(target, to_theta)``; ``to_theta`` is ``None`` for the standard parametrisation."""
    if parametrisation == "standard":
        return standard_target(spec, data), None
    target = RepriorisedTarget(spec, data, ReparamConfig(lam=lam), path=path)
    return target, target.to_theta


# -- stepsize tuning ---------------------------------------------------------


def _pilot_acceptance(target, state: ChainState, stepsize: float, damping: float, steps: int) -> float:
    st = copy.deepcopy(state)
    cfg = LmcConfig(stepsize=stepsize, damping=damping, steps=steps)
    acc = 0.0
    try:
        for _ in range(steps):
            lmc_step(st, target, cfg)
            acc += st.last_accept_prob
    except NonFiniteDensity:
        return 0.0
    return acc / steps


def _advance(target, state: ChainState, stepsize: float, damping: float, steps: int) -> ChainState:
    st = copy.deepcopy(state)
    cfg = LmcConfig(stepsize=stepsize, damping=damping, steps=steps)
    try:
        for _ in range(steps):
            lmc_step(st, target, cfg)
    except NonFiniteDensity:
        return state
    return st


def tune_stepsize(
    target,
    init: np.ndarray,
    damping: float,
    target_acceptance: float = 0.985,
    lo: float = 1e-5,
    hi: float = 2.0,
    pilot_steps: int = 1000,
    rounds: int = 2,
    iters: int = 10,
    seed: int = 0,
) -> float:
    """Largest stepsize (by geometric bisection) whose pilot acceptance meets the target.

    Each round bisects from the current state, then moves the state forward at
    a slightly smaller stepsize so later rounds see more typical positions.
    """
    state = ChainState.start(target, init, np.random.default_rng(seed))
    eps = lo
    for _ in range(rounds):
        a, b = lo, hi
        for _ in range(iters):
            mid = math.sqrt(a * b)
            if _pilot_acceptance(target, state, mid, damping, pilot_steps) >= target_acceptance:
                a = mid
            else:
                b = mid
        eps = a
        state = _advance(target, state, 0.9 * eps, damping, 2 * pilot_steps)
    return eps


def largest_stepsize(accept_fn: Callable[[float], float], floor: float, lo: float, hi: float, iters: int = 14) -> float:
    """Geometric bisection for the largest ``eps`` with ``accept_fn(eps) >= floor``."""
    if accept_fn(lo) < floor:
        return lo
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if accept_fn(mid) >= floor:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class TunedRun:
    stores: list
    stepsize: float
    attempts: int
    seconds: float


def run_tuned(
    make_target: Callable[[], Callable],
    dim: int,
    cfg: LmcConfig,
    chains: int = 1,
    transform=None,
    floor: float = ACCEPTANCE_FLOOR,
    shrink: float = 0.85,
    max_attempts: int = 4,
    workers: int = 1,
) -> TunedRun:
    """Run chains; if mean post-burn-in acceptance falls below ``floor``, shrink the stepsize and rerun."""
    t0 = time.perf_counter()
    for attempt in range(1, max_attempts + 1):
        try:
            stores = run_chains(make_target, chains, cfg, dim, transform=transform, workers=workers)
            acc = float(np.mean([s.mean_acceptance for s in stores]))
        except NonFiniteDensity:
            stores, acc = None, 0.0
        if acc >= floor or attempt == max_attempts:
            if stores is None:
                raise NonFiniteDensity("chain diverged at every attempted stepsize")
            return TunedRun(stores, cfg.stepsize, attempt, time.perf_counter() - t0)
        cfg = LmcConfig(**{**_lmc_fields(cfg), "stepsize": cfg.stepsize * shrink})
    raise AssertionError("unreachable")


def _lmc_fields(cfg: LmcConfig) -> dict:
    return {k: getattr(cfg, k) for k in LmcConfig.__dataclass_fields__}


# -- sampling ------------------------------------------------------------------


@dataclass
class SamplingResult:
    config: ExperimentConfig
    spec: NetworkSpec
    data: Dataset
    stores: list
    report: diagnostics.DiagnosticsReport
    stepsize: float
    tune_seconds: float
    sample_seconds: float


def lmc_config(cfg: ExperimentConfig, stepsize: float) -> LmcConfig:
    s = cfg.sampler
    return LmcConfig(
        stepsize=stepsize,
        damping=s.damping,
        steps=s.steps,
        burn_in=s.burn_in,
        thin=s.thin,
        mh_correction=s.mh_correction,
        seed=cfg.seed,
        target_parametrisation=cfg.parametrisation,
    )


def run_sampling(cfg: ExperimentConfig) -> SamplingResult:
    data, X_test = make_dataset(cfg.data, cfg.noise)
    spec = make_spec(cfg.network, data)

    def factory():
        return make_target(spec, data, cfg.parametrisation, cfg.lam, cfg.density_path)[0]

    to_theta = make_target(spec, data, cfg.parametrisation, cfg.lam, cfg.density_path)[1]
    t0 = time.perf_counter()
    stepsize = cfg.sampler.stepsize
    if stepsize == "auto":
        init = np.random.default_rng(cfg.seed).standard_normal(spec.num_params)
        stepsize = tune_stepsize(factory(), init, cfg.sampler.damping, cfg.sampler.target_acceptance, seed=cfg.seed)
    tune_seconds = time.perf_counter() - t0
    t0 = time.perf_counter()
    stores = run_chains(factory, cfg.sampler.chains, lmc_config(cfg, float(stepsize)), spec.num_params, to_theta, cfg.sampler.workers)
    sample_seconds = time.perf_counter() - t0
    projections = diagnostics.make_projections(spec.num_params, cfg.projections, cfg.projection_seed)
    preds = None
    if X_test is not None:
        preds = [np.array([predict(spec, th, X_test).ravel() for th in s.positions]) for s in stores]
    report = diagnostics.summarize(stores, projections, preds, config=cfg.to_dict())
    report.config = {"experiment": cfg.to_dict(), "sampler": stores[0].config, "stored_parameters": "theta"}
    return SamplingResult(cfg, spec, data, stores, report, float(stepsize), tune_seconds, sample_seconds)


# -- benchmark ---------------------------------------------------------------


def step_times(target, init: np.ndarray, stepsize: float, damping: float, steps: int, warmup: int, seed: int = 0) -> np.ndarray:
    """Wall time of each of ``steps`` sampler steps after ``warmup`` untimed ones."""
    state = ChainState.start(target, init, np.random.default_rng(seed))
    cfg = LmcConfig(stepsize=stepsize, damping=damping, steps=steps + warmup)
    for _ in range(warmup):
        lmc_step(state, target, cfg)
    out = np.empty(steps)
    clock = time.perf_counter
    for i in range(steps):
        t = clock()
        lmc_step(state, target, cfg)
        out[i] = clock() - t
    return out


def benchmark(cfg: ExperimentConfig, widths=None, stepsize: float = 1e-3) -> list:
    """Rows ``(width, parametrisation, median seconds/step, steps, overhead ratio)``.

    The stepsize only needs to keep the chain finite; timing does not depend on it.
    """
    data, _ = make_dataset(cfg.data, cfg.noise)
    widths = list(cfg.bench.widths if widths is None else widths)
    rows = []
    for width in widths:
        depth = max(len(cfg.network.widths), 1)
        spec = make_spec(cfg.network, data, widths=[width] * depth)
        init = np.random.default_rng(cfg.seed).standard_normal(spec.num_params)
        medians = {}
        for param in ("standard", "repriorised"):
            target, _ = make_target(spec, data, param, cfg.lam if param == "repriorised" else None)
            times = step_times(target, init, stepsize, cfg.sampler.damping, cfg.bench.steps, cfg.bench.warmup, cfg.seed)
            medians[param] = float(np.median(times))
        for param in ("standard", "repriorised"):
            rows.append(
                {
                    "width": width,
                    "parametrisation": param,
                    "median_step_seconds": medians[param],
                    "steps": cfg.bench.steps,
                    "overhead_ratio": medians[param] / medians["standard"],
                }
            )
    return rows


# -- slices --------------------------------------------------------------------


def triangle_points(a: np.ndarray, b: np.ndarray, c: np.ndarray, resolution: int):
    """Barycentric grid over the spherical triangle ``(a, b, c)``.

    Yields ``(u, v, point)`` for ``i + j <= r`` with ``u = i/r``, ``v = j/r``:
    first slerp ``a -> b`` by ``u / (1 - v)``, then towards ``c`` by ``v``.
    Corners are reproduced exactly.
    """
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    if not (a.shape == b.shape == c.shape and a.ndim == 1):
        raise DimensionMismatch("slice corners must be vectors of equal length")
    r = int(resolution)
    for j in range(r + 1):
        v = j / r
        for i in range(r - j + 1):
            u = i / r
            if j == r:
                yield u, v, c.copy()
                continue
            q = linalg.slerp_path(a, b, i / (r - j))
            yield u, v, linalg.slerp_path(q, c, v)


def slice_rows(spec: NetworkSpec, data: Dataset, thetas, resolution: int, lam=None) -> list:
    """Log densities over a triangle through three weight vectors.

    The standard column interpolates the weights; the repriorised column
    interpolates their preimages ``phi = T^-1(theta)``.
    """
    thetas = [np.asarray(t, dtype=float) for t in thetas]
    if len(thetas) != 3:
        raise DimensionMismatch("need exactly three parameter vectors")
    for t in thetas:
        if t.shape != (spec.num_params,):
            raise DimensionMismatch(f"parameter vector has length {t.shape[0]}, expected {spec.num_params}")
    rcfg = ReparamConfig(lam=lam)
    phis = [inverse_repriorise(spec, t, data, rcfg) for t in thetas]
    std_pts = triangle_points(*thetas, resolution)
    rep_pts = triangle_points(*phis, resolution)
    rows = []
    for (u, v, th), (_, _, ph) in zip(std_pts, rep_pts):
        lp_std = log_post_standard(spec, th, data)[0]
        lp_rep = log_density_reparam(spec, ph, data, rcfg, path="general")[0]
        rows.append((u, v, lp_std, lp_rep))
    return rows
