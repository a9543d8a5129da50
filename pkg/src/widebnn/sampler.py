"""Underdamped Langevin Monte Carlo with partial momentum refresh.

One step is: refresh ``m <- alpha m + sqrt(1 - alpha^2) xi``, then a single
leapfrog step of size ``eps`` on ``H(z, m) = -log p(z) + |m|^2 / 2``. The
acceptance probability ``min(1, exp(-dH))`` is always recorded; with
``mh_correction`` it is also used to accept or reject (momentum negated on
rejection). ``alpha = 0`` is HMC with one leapfrog step; ``alpha -> 1`` is
heavily underdamped.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteDensity

Target = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class LmcConfig:
    stepsize: float
    damping: float = 0.9  # momentum retention per step
    steps: int = 1000
    burn_in: int = 0
    thin: int = 1
    mh_correction: bool = False
    seed: int = 0
    target_parametrisation: str = "standard"

    def __post_init__(self):
        if not self.stepsize >= 0:
            raise ValueError("stepsize must be >= 0")
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping must lie in [0, 1]")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0 <= self.burn_in <= self.steps:
            raise ValueError("need 0 <= burn_in <= steps")
        if self.target_parametrisation not in ("standard", "repriorised"):
            raise ValueError(f"unknown parametrisation {self.target_parametrisation!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["damping_convention"] = "momentum retention alpha: m <- alpha m + sqrt(1 - alpha^2) xi"
        return d


@dataclass
class ChainState:
    position: np.ndarray
    momentum: np.ndarray
    rng: np.random.Generator
    log_density: float
    grad: np.ndarray
    step: int = 0
    last_accept_prob: float = 1.0
    accept_sum: float = 0.0

    @property
    def acceptance(self) -> float:
        return self.accept_sum / self.step if self.step else 1.0

    @classmethod
    def start(cls, target: Target, position, rng: np.random.Generator) -> "ChainState":
        position = np.array(position, dtype=float)
        logp, grad = target(position)
        if not (np.isfinite(logp) and np.all(np.isfinite(grad))):
            raise NonFiniteDensity("initial position has a non-finite density")
        return cls(position, rng.standard_normal(position.shape), rng, float(logp), np.asarray(grad, dtype=float))


@dataclass
class SampleStore:
    chain_id: int
    positions: np.ndarray  # (S, dim), thinned post-burn-in
    log_density: np.ndarray  # (S,)
    config: dict
    trace_log_density: np.ndarray = field(repr=False, default=None)  # per step
    trace_accept_prob: np.ndarray = field(repr=False, default=None)
    trace_score_gap: np.ndarray = field(repr=False, default=None)  # |z + grad log p(z)|

    @property
    def num_samples(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def mean_acceptance(self) -> float:
        burn = self.config.get("burn_in", 0)
        acc = self.trace_accept_prob[burn:]
        return float(acc.mean()) if acc.size else float("nan")


def leapfrog(target: Target, z, m, grad, eps: float):
    m_half = m + 0.5 * eps * grad
    z_new = z + eps * m_half
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        logp, grad_new = target(z_new)
    grad_new = np.asarray(grad_new, dtype=float)
    m_new = m_half + 0.5 * eps * grad_new
    return z_new, m_new, float(logp), grad_new


def lmc_step(state: ChainState, target: Target, cfg: LmcConfig) -> ChainState:
    """Advance ``state`` by one step (in place) and return it."""
    rng = state.rng
    a = cfg.damping
    m = a * state.momentum + math.sqrt(1.0 - a * a) * rng.standard_normal(state.momentum.shape)
    h0 = -state.log_density + 0.5 * (m @ m)
    z_new, m_new, logp, grad = leapfrog(target, state.position, m, state.grad, cfg.stepsize)
    with np.errstate(over="ignore", invalid="ignore"):
        dH = -logp + 0.5 * (m_new @ m_new) - h0
    if not (np.isfinite(dH) and np.all(np.isfinite(grad))):
        raise NonFiniteDensity(f"non-finite density at step {state.step + 1}; stepsize too large?")
    accept_prob = 1.0 if dH <= 0 else math.exp(-dH)
    if cfg.mh_correction and rng.uniform() >= accept_prob:
        state.momentum = -m
    else:
        state.position, state.momentum = z_new, m_new
        state.log_density, state.grad = logp, grad
    state.step += 1
    state.last_accept_prob = accept_prob
    state.accept_sum += accept_prob
    return state


def run_chain(
    target: Target,
    init: np.ndarray,
    cfg: LmcConfig,
    seed=None,
    chain_id: int = 0,
    transform: Optional[Callable] = None,
) -> SampleStore:
    """Run one chain; ``transform`` maps stored positions (e.g. phi -> theta)."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    state = ChainState.start(target, init, rng)
    n_keep = (cfg.steps - cfg.burn_in) // cfg.thin
    positions = []
    kept_logp = np.empty(n_keep)
    trace_logp = np.empty(cfg.steps)
    trace_acc = np.empty(cfg.steps)
    trace_gap = np.empty(cfg.steps)
    for t in range(1, cfg.steps + 1):
        lmc_step(state, target, cfg)
        trace_logp[t - 1] = state.log_density
        trace_acc[t - 1] = state.last_accept_prob
        trace_gap[t - 1] = np.linalg.norm(state.position + state.grad)
        if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thin == 0:
            j = len(positions)
            z = state.position
            positions.append(transform(z) if transform is not None else z.copy())
            kept_logp[j] = state.log_density
    dim = np.asarray(init).shape[0] if not positions else positions[0].shape[0]
    pos = np.array(positions).reshape(n_keep, dim)
    return SampleStore(chain_id, pos, kept_logp, cfg.to_dict(), trace_logp, trace_acc, trace_gap)


def chain_seeds(master_seed, M: int):
    """Per-chain ``(init_seed, run_seed)`` pairs from one master seed."""
    return [tuple(child.spawn(2)) for child in np.random.SeedSequence(master_seed).spawn(M)]


def run_chains(
    make_target: Callable[[], Target],
    M: int,
    cfg: LmcConfig,
    dim: int,
    transform: Optional[Callable] = None,
    workers: int = 1,
) -> list:
    """M independent chains, each started from a fresh N(0, I) draw.

    ``make_target`` is called once per chain. Results do not depend on
    ``workers`` or on execution order.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    seeds = chain_seeds(cfg.seed, M)

    def one(i):
        init_seed, run_seed = seeds[i]
        init = np.random.default_rng(init_seed).standard_normal(dim)
        return run_chain(make_target(), init, cfg, seed=run_seed, chain_id=i, transform=transform)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(M)))
    return [one(i) for i in range(M)]
