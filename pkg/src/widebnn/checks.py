"""Self-checks against closed-form oracles, at configurable sizes.

Every check returns a :class:`CheckResult` with the measured quantities and
the threshold used. The CLI ``verify`` command runs them at reduced sizes;
the acceptance tests run them at full size.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import diagnostics, experiments, linear, nngp
from .data import gaussian_blobs, linear_regression
from .model import Dataset, NetworkSpec, embedding, hidden_forward
from .reprior import (
    ReparamConfig,
    RepriorisedTarget,
    delta_phi,
    log_density_reparam,
    repriorise,
    sqrt_woodbury,
)
from .errors import NonFiniteDensity
from .sampler import LmcConfig, leapfrog, run_chain


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


# -- random instances ------------------------------------------------------------


def random_instance(rng: np.random.Generator, max_width: int = 64, max_n: int = 32):
    """A random small network, dataset and parameter vector."""
    arch = "residual" if rng.uniform() < 0.3 else "plain"
    if arch == "residual":
        w = int(rng.integers(4, max_width + 1))
        widths = (w,) * int(rng.choice([1, 3]))
    else:
        widths = tuple(int(v) for v in rng.integers(4, max_width + 1, size=int(rng.integers(1, 3))))
    kind = str(rng.choice(["gelu", "erf", "gelu"]))
    d0 = int(rng.integers(1, 5))
    d_out = int(rng.integers(1, 4))
    n = int(rng.integers(3, max_n + 1))
    noise = float(rng.uniform(0.1, 1.0))
    spec = NetworkSpec.fcn(d0, widths, d_out, kind, sigma_w2=float(rng.uniform(1.0, 2.5)), architecture=arch, skip_c=float(rng.uniform(0.5, 2)))
    X = rng.standard_normal((n, d0))
    Y = 0.5 * rng.standard_normal((n, d_out))
    return spec, Dataset(X, Y, noise), rng.standard_normal(spec.num_params)


def central_difference(f, x: np.ndarray, idx, h: float = 1e-3) -> np.ndarray:
    """Fourth-order central difference of a scalar ``f`` along coordinates ``idx``."""
    out = np.empty(len(idx))
    for k, i in enumerate(idx):
        vals = []
        for s in (-2, -1, 1, 2):
            xp = x.copy()
            xp[i] += s * h
            vals.append(f(xp))
        out[k] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    return out


def _probe_indices(spec: NetworkSpec, rng, limit: int):
    if spec.num_params <= limit:
        return np.arange(spec.num_params)
    return np.sort(rng.choice(spec.num_params, size=limit, replace=False))


# -- checks ------------------------------------------------------------------------


@_timed
def gradient_check(instances: int = 20, seed: int = 0, tol: float = 1e-5, coords: int = 200, max_width: int = 64) -> CheckResult:
    """Both density paths against finite differences on random instances."""
    rng = np.random.default_rng(seed)
    worst = {"general": 0.0, "marginal": 0.0}
    for _ in range(instances):
        spec, data, phi = random_instance(rng, max_width)
        idx = _probe_indices(spec, rng, coords)
        for path in worst:
            _, g = log_density_reparam(spec, phi, data, path=path)
            fd = central_difference(lambda p: log_density_reparam(spec, p, data, path=path)[0], phi, idx)
            big = np.abs(g[idx]) > 1e-8
            err = np.max(np.abs(fd[big] - g[idx][big]) / np.abs(g[idx][big])) if big.any() else 0.0
            worst[path] = max(worst[path], float(err))
    ok = all(v <= tol for v in worst.values())
    return CheckResult(
        "gradient-vs-finite-difference",
        ok,
        {"max_rel_error": worst, "tolerance": tol, "instances": instances},
        f"max rel err general={worst['general']:.2e} marginal={worst['marginal']:.2e} (tol {tol:g})",
    )


@_timed
def path_agreement_check(instances: int = 20, seed: int = 1, tol_value: float = 1e-8, tol_grad: float = 1e-6) -> CheckResult:
    """General and marginal routes agree up to an additive constant."""
    rng = np.random.default_rng(seed)
    worst_v = worst_g = 0.0
    for _ in range(instances):
        spec, data, phi1 = random_instance(rng)
        phi2 = rng.standard_normal(spec.num_params)
        g1, gg1 = log_density_reparam(spec, phi1, data, path="general")
        g2, _ = log_density_reparam(spec, phi2, data, path="general")
        m1, mg1 = log_density_reparam(spec, phi1, data, path="marginal")
        m2, _ = log_density_reparam(spec, phi2, data, path="marginal")
        dv = abs((g1 - g2) - (m1 - m2)) / max(abs(g1 - g2), 1e-300)
        worst_v = max(worst_v, dv)
        worst_g = max(worst_g, _rel(gg1, mg1))
    ok = worst_v <= tol_value and worst_g <= tol_grad
    return CheckResult(
        "density-path-agreement",
        ok,
        {"max_rel_value_diff": worst_v, "max_rel_grad_diff": worst_g},
        f"value diff {worst_v:.2e} (tol {tol_value:g}), grad {worst_g:.2e} (tol {tol_grad:g})",
    )


@_timed
def space_equivalence_check(shapes=((5, 9), (9, 9), (50, 4)), seed: int = 2, tol: float = 1e-8, tol_sqrt: float = 1e-10) -> CheckResult:
    """Feature-space and data-space maps give the same theta and log-determinant."""
    rng = np.random.default_rng(seed)
    theta_err = det_err = 0.0
    for n, D in shapes:
        spec = NetworkSpec.fcn(2, (D - 1,), 2, "gelu")
        data = Dataset(rng.standard_normal((n, 2)), rng.standard_normal((n, 2)), 0.05)
        phi = rng.standard_normal(spec.num_params)
        th_f, fact_f = repriorise(spec, phi, data, ReparamConfig())
        th_s, fact_s = repriorise(spec, phi, data, ReparamConfig(space="data", data_method="structured"))
        _, fact_e = repriorise(spec, phi, data, ReparamConfig(space="data", data_method="eigen"))
        theta_err = max(theta_err, float(np.linalg.norm(th_f - th_s) / np.linalg.norm(th_f)))
        for fact in (fact_s, fact_e):
            det_err = max(det_err, abs(fact.log_abs_det - fact_f.log_abs_det) / abs(fact_f.log_abs_det))
    sq_err = 0.0
    for m, p in ((3, 7), (20, 6)):
        A = rng.standard_normal((m, p))
        S = sqrt_woodbury(A)
        target = np.eye(p) + A.T @ A
        sq_err = max(sq_err, float(np.linalg.norm(S @ S - target) / np.linalg.norm(target)))
    ok = theta_err <= tol and det_err <= tol and sq_err <= tol_sqrt
    return CheckResult(
        "feature-data-space-equivalence",
        ok,
        {"theta_rel_err": theta_err, "logdet_rel_err": det_err, "sqrt_woodbury_rel_err": sq_err},
        f"theta {theta_err:.1e}, log|det| {det_err:.1e} (tol {tol:g}); sqrt identity {sq_err:.1e} (tol {tol_sqrt:g})",
    )


def linear_instance(n: int, d: int, seed: int, noise: float = 0.01, bias_scale: float = 0.1):
    """Depth-0 network with ``d`` parameters (``d - 1`` inputs plus a bias)."""
    spec = NetworkSpec.linear(d - 1, 1, bias_scale)
    return spec, linear_regression(n, d - 1, seed, noise)


@_timed
def linear_exactness_check(
    d: int = 20,
    n: int = 50,
    steps: int = 100_000,
    thin: int = 25,
    burn_in: int = 1000,
    stepsize: float = 0.15,
    damping: float = 0.9,
    projections: int = 100,
    min_pass: int = 95,
    seed: int = 3,
) -> CheckResult:
    """Repriorised sampling of a linear model is sampling a standard normal."""
    spec, data = linear_instance(n, d, seed)
    target = RepriorisedTarget(spec, data)
    init = np.random.default_rng(seed).standard_normal(spec.num_params)
    cfg = LmcConfig(stepsize=stepsize, damping=damping, steps=steps, burn_in=burn_in, thin=thin, seed=seed)
    store = run_chain(target, init, cfg)
    P = diagnostics.make_projections(spec.num_params, projections, seed)
    proj = store.positions @ P.directions.T
    pvals = np.array([stats.kstest(proj[:, j], "norm").pvalue for j in range(projections)])
    passing = int(np.sum(pvals > 0.01))
    max_gap = float(np.max(store.trace_score_gap))
    ok = passing >= min_pass and max_gap <= 1e-10
    return CheckResult(
        "linear-model-exactness",
        ok,
        {"ks_passing": passing, "projections": projections, "max_delta_phi": max_gap, "samples": store.num_samples, "acceptance": store.mean_acceptance},
        f"{passing}/{projections} projections with KS p > 0.01 (need {min_pass}); max |delta phi| {max_gap:.1e}",
    )


@_timed
def kl_anchor_check(instances: int = 20, seed: int = 4, tol: float = 1e-8, tamper: float = 0.0) -> CheckResult:
    """Weight-space Gaussian KL equals its kernel-space form.

    ``tamper`` perturbs the noise variance seen by the kernel side only; any
    non-zero value should make the check fail.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n, p = int(rng.integers(2, 30)), int(rng.integers(1, 30))
        X = rng.standard_normal((n, p)) / math.sqrt(p)
        y = rng.standard_normal(n)
        s2 = float(10 ** rng.uniform(-2, 0))
        q = linear.linear_posterior(X, y, s2)
        kl_w = linear.gaussian_kl(linear.GaussianDist.standard(p), q)
        kl_k = nngp.kl_prior_limit(X @ X.T, y, s2 * (1.0 + tamper))
        worst = max(worst, abs(kl_w - kl_k) / abs(kl_w))
    return CheckResult(
        "kl-anchor",
        worst <= tol,
        {"max_rel_err": worst, "tamper": tamper},
        f"max rel err {worst:.2e} (tol {tol:g})" + (f", noise tampered by {tamper:g}" if tamper else ""),
    )


@_timed
def leapfrog_order_check(eps_list=(0.2, 0.1, 0.05, 0.025), seed: int = 5, slope_range=(2.7, 3.3), tol_h: float = 1e-10) -> CheckResult:
    """One-step leapfrog position error against the exact flow scales as eps^3."""
    rng = np.random.default_rng(seed)
    n, p = 10, 6
    X = rng.standard_normal((n, p)) / math.sqrt(p)
    C, b = linear.potential_terms(X, rng.standard_normal(n), 1.0)
    z0, m0 = rng.standard_normal(p), rng.standard_normal(p)

    def target(z):
        return -0.5 * z @ C @ z + b @ z, b - C @ z

    errs = []
    for eps in eps_list:
        z1, _, _, _ = leapfrog(target, z0, m0, target(z0)[1], eps)
        zt, _ = linear.exact_hamiltonian_flow(C, b, z0, m0, eps)
        errs.append(float(np.linalg.norm(z1 - zt)))
    slope = float(np.polyfit(np.log(eps_list), np.log(errs), 1)[0])
    H0 = linear.hamiltonian(C, b, z0, m0)
    drift = max(
        abs(linear.hamiltonian(C, b, *linear.exact_hamiltonian_flow(C, b, z0, m0, t)) - H0) / max(abs(H0), 1.0)
        for t in (0.1, 1.0, 10.0, 100.0)
    )
    ok = slope_range[0] <= slope <= slope_range[1] and drift <= tol_h
    return CheckResult(
        "leapfrog-order-and-exact-flow",
        ok,
        {"slope": slope, "errors": errs, "eps": list(eps_list), "exact_flow_energy_drift": drift},
        f"log-log slope {slope:.3f} (need {slope_range[0]}..{slope_range[1]}); exact-flow energy drift {drift:.1e}",
    )


def _acceptance(target, init, eps, damping, steps, seed):
    cfg = LmcConfig(stepsize=eps, damping=damping, steps=steps, seed=seed)
    try:
        return run_chain(target, init, cfg).trace_accept_prob.mean()
    except NonFiniteDensity:  # divergence counts as rejection
        return 0.0


@_timed
def stepsize_scaling_check(
    ns=(16, 64, 256, 1024),
    d: int = 5,
    steps: int = 10_000,
    damping: float = 0.9,
    floor: float = 0.98,
    seed: int = 6,
    slope_range=(-0.65, -0.35),
    max_spread: float = 2.0,
) -> CheckResult:
    """Largest stepsize meeting the acceptance floor, as the dataset grows."""
    eps = {"standard": [], "repriorised": []}
    for n in ns:
        spec = NetworkSpec.linear(d, 1, 0.0)
        data = linear_regression(n, d, seed + n, 0.01)
        post = linear.linear_posterior(embedding(spec, data.X), data.Y[:, 0], data.noise)
        rng = np.random.default_rng(seed)
        init_std = post.mean + np.linalg.cholesky(post.cov) @ rng.standard_normal(spec.num_params)
        init_rep = rng.standard_normal(spec.num_params)
        std, rep = experiments.make_target(spec, data, "standard")[0], experiments.make_target(spec, data, "repriorised")[0]
        eps["standard"].append(experiments.largest_stepsize(lambda e: _acceptance(std, init_std, e, damping, steps, seed), floor, 1e-4, 4.0))
        eps["repriorised"].append(experiments.largest_stepsize(lambda e: _acceptance(rep, init_rep, e, damping, steps, seed), floor, 1e-4, 4.0))
    slope = float(np.polyfit(np.log(ns), np.log(eps["standard"]), 1)[0])
    spread = float(max(eps["repriorised"]) / min(eps["repriorised"]))
    ok = slope_range[0] <= slope <= slope_range[1] and spread < max_spread
    return CheckResult(
        "stepsize-scaling",
        ok,
        {"n": list(ns), "eps": eps, "standard_slope": slope, "repriorised_spread": spread},
        f"standard slope {slope:.3f} (need {slope_range[0]}..{slope_range[1]}); repriorised max/min {spread:.2f} (need < {max_spread})",
    )


@_timed
def delta_phi_decay_check(widths=(32, 128, 512, 2048), n: int = 32, draws: int = 100, seed: int = 7, max_ratio: float = 0.5) -> CheckResult:
    """Median score discrepancy over prior draws shrinks with width."""
    data = gaussian_blobs(n, 4, 3, seed, 0.01)
    medians = []
    for w in widths:
        spec = NetworkSpec.fcn(4, (w,), 3, "gelu")
        rng = np.random.default_rng(seed + w)
        norms = [delta_phi(spec, rng.standard_normal(spec.num_params), data)[1] for _ in range(draws)]
        medians.append(float(np.median(norms)))
    decreasing = all(b < a for a, b in zip(medians, medians[1:]))
    ratio = medians[-1] / medians[0]
    return CheckResult(
        "delta-phi-width-decay",
        decreasing and ratio < max_ratio,
        {"widths": list(widths), "median_norm": medians, "ratio_last_first": ratio},
        f"medians {', '.join(f'{m:.3g}' for m in medians)}; last/first {ratio:.3f} (need < {max_ratio})",
    )


def _empirical_kernel(spec: NetworkSpec, X, rng) -> np.ndarray:
    phi = rng.standard_normal(spec.num_params)
    h, _ = hidden_forward(spec, phi, X, need_grad=False)
    return nngp.empirical_kernel(embedding(spec, h))


@_timed
def kernel_convergence_check(
    widths=(64, 512, 4096),
    kinds=("erf", "gelu"),
    n: int = 16,
    draws: int = 20,
    ref_width: int = 2**15,
    ref_draws: int = 20,
    seed: int = 8,
    final_tol: float = 0.1,
) -> CheckResult:
    """Empirical readout kernels approach their infinite-width limit."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 4))
    errors, ok = {}, True
    for kind in kinds:
        if kind == "erf":
            ref = nngp.analytic_kernel(NetworkSpec.fcn(4, (1,), 1, "erf"), X)
        else:
            ref_spec = NetworkSpec.fcn(4, (ref_width,), 1, kind)
            ref = np.mean([_empirical_kernel(ref_spec, X, rng) for _ in range(ref_draws)], axis=0)
        errs = []
        for w in widths:
            spec = NetworkSpec.fcn(4, (w,), 1, kind)
            e = [np.linalg.norm(_empirical_kernel(spec, X, rng) - ref) / np.linalg.norm(ref) for _ in range(draws)]
            errs.append(float(np.mean(e)))
        errors[kind] = errs
        ok &= all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] <= final_tol
    return CheckResult(
        "kernel-convergence",
        ok,
        {"widths": list(widths), "mean_single_draw_rel_frobenius": errors},
        "; ".join(f"{k}: " + ", ".join(f"{e:.3f}" for e in v) for k, v in errors.items()) + f" (final <= {final_tol})",
    )


def rhat_bruteforce(chains) -> float:
    """Direct evaluation with explicit 1/(MS) weights, for cross-checking."""
    z = np.asarray(chains, dtype=float)
    M, S = z.shape
    w = 1.0 / (M * S)
    grand = sum(w * z[m, s] for m in range(M) for s in range(S))
    means = [sum(z[m]) / S for m in range(M)]
    within = sum(w * (z[m, s] - means[m]) ** 2 for m in range(M) for s in range(S))
    between = sum((1.0 / M) * (means[m] - grand) ** 2 for m in range(M))
    return (within + between) / within


@_timed
def diagnostics_calibration_check(S: int = 100_000, rho: float = 0.5, seed: int = 9, tol: float = 0.1, rhat_S: int = 10_000, rhat_tol: float = 0.05) -> CheckResult:
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(S)
    x = np.empty(S)
    x[0] = e[0] / math.sqrt(1 - rho * rho)
    for t in range(1, S):
        x[t] = rho * x[t - 1] + e[t]
    ess_ratio = diagnostics.ess(x) / S
    target = (1 - rho) / (1 + rho)
    ess_err = abs(ess_ratio - target) / target
    chains = np.stack([rng.normal(-5, 1, rhat_S), rng.normal(5, 1, rhat_S)])
    r = diagnostics.rhat(chains)
    r_ref = rhat_bruteforce(chains)
    r_err = abs(r - r_ref) / r_ref
    ok = ess_err <= tol and r_err <= rhat_tol
    return CheckResult(
        "diagnostics-calibration",
        ok,
        {"ess_per_step": ess_ratio, "ess_target": target, "rhat": r, "rhat_bruteforce": r_ref},
        f"AR(1) ESS/S {ess_ratio:.4f} vs {target:.4f} ({ess_err:.1%}); R-hat^2 {r:.3f} vs brute force {r_ref:.3f}",
    )


# -- sampling-efficiency checks (expensive) -------------------------------------


def _tuned_chains(spec, data, param, steps, burn_in, thin, damping, chains, seed):
    target, to_theta = experiments.make_target(spec, data, param)
    init = np.random.default_rng(seed).standard_normal(spec.num_params)
    eps = experiments.tune_stepsize(target, init, damping, 0.985, seed=seed)
    cfg = LmcConfig(stepsize=eps, damping=damping, steps=steps, burn_in=burn_in, thin=thin, seed=seed, target_parametrisation=param)
    return experiments.run_tuned(lambda: target, spec.num_params, cfg, chains, to_theta)


@_timed
def mixing_check(
    widths=(32, 256),
    n: int = 64,
    steps: int = 200_000,
    thin: int = 25,
    damping: float = 0.9,
    seed: int = 10,
    projections: int = 100,
    min_ratio: float = 5.0,
) -> CheckResult:
    """Projected ESS per step, repriorised over standard, at two widths."""
    data = gaussian_blobs(n, 4, 3, seed, 0.01)
    burn_in = steps // 10
    per_width, ratios, accept, eps = {}, [], {}, {}
    for w in widths:
        spec = NetworkSpec.fcn(4, (w,), 3, "gelu")
        P = diagnostics.make_projections(spec.num_params, projections, seed)
        vals = {}
        for param in ("standard", "repriorised"):
            run = _tuned_chains(spec, data, param, steps, burn_in, thin, damping, 1, seed)
            store = run.stores[0]
            raw = diagnostics.projected_ess(store.positions[None], P)
            vals[param] = float(np.nanmean(raw) / store.num_samples)
            accept[f"{w}/{param}"] = store.mean_acceptance
            eps[f"{w}/{param}"] = run.stepsize
        per_width[w] = vals
        ratios.append(vals["repriorised"] / vals["standard"])
    acc_ok = all(a >= experiments.ACCEPTANCE_FLOOR for a in accept.values())
    ok = acc_ok and ratios[-1] >= min_ratio and all(b > a for a, b in zip(ratios, ratios[1:]))
    return CheckResult(
        "mixing-speed",
        ok,
        {"ess_per_sample": per_width, "ratios": ratios, "acceptance": accept, "stepsize": eps},
        f"ESS ratios {', '.join(f'w={w}: {r:.1f}x' for w, r in zip(widths, ratios))} (need >= {min_ratio} at the widest and increasing); "
        f"min acceptance {min(accept.values()):.3f}",
    )


@_timed
def rhat_check(width: int = 256, n: int = 64, chains: int = 4, steps: int = 100_000, thin: int = 25, damping: float = 0.9, seed: int = 11, threshold: float = 1.2) -> CheckResult:
    """Four chains from independent prior draws: repriorised agree, standard do not."""
    data = gaussian_blobs(n, 4, 3, seed, 0.01)
    spec = NetworkSpec.fcn(4, (width,), 3, "gelu")
    out, accept = {}, {}
    for param in ("standard", "repriorised"):
        run = _tuned_chains(spec, data, param, steps, steps // 10, thin, damping, chains, seed)
        samples = np.stack([s.positions for s in run.stores])
        out[param] = float(np.nanmax(diagnostics.rhat_per_dim(samples)))
        accept[param] = float(np.mean([s.mean_acceptance for s in run.stores]))
    ok = out["repriorised"] <= threshold < out["standard"] and min(accept.values()) >= experiments.ACCEPTANCE_FLOOR
    return CheckResult(
        "same-distribution-rhat",
        ok,
        {"max_rhat": out, "acceptance": accept},
        f"max per-dim R-hat^2 repriorised {out['repriorised']:.3f}, standard {out['standard']:.3f} (threshold {threshold})",
    )


@_timed
def overhead_check(width: int = 512, n: int = 256, depth: int = 3, steps: int = 1000, warmup: int = 100, seed: int = 12, max_ratio: float = 3.0) -> CheckResult:
    """Median per-step cost of the repriorised sampler relative to the standard one."""
    data = gaussian_blobs(n, 4, 3, seed, 0.01)
    spec = NetworkSpec.fcn(4, (width,) * depth, 3, "gelu")
    init = np.random.default_rng(seed).standard_normal(spec.num_params)
    med = {}
    for param in ("standard", "repriorised"):
        target, _ = experiments.make_target(spec, data, param)
        med[param] = float(np.median(experiments.step_times(target, init, 1e-3, 0.9, steps, warmup, seed)))
    ratio = med["repriorised"] / med["standard"]
    return CheckResult(
        "benchmark-overhead",
        ratio <= max_ratio,
        {"median_step_seconds": med, "ratio": ratio},
        f"median step {med['standard'] * 1e3:.2f} ms vs {med['repriorised'] * 1e3:.2f} ms, ratio {ratio:.2f} (need <= {max_ratio})",
    )


# -- verify suite --------------------------------------------------------------------


def reduced_suite(seed: int = 0, tamper: float = 0.0) -> list:
    """The cheap checks at reduced sizes (seconds to a couple of minutes)."""
    s = 1000 * seed
    return [
        gradient_check(instances=5, seed=s, coords=60, max_width=32),
        path_agreement_check(instances=5, seed=s + 1),
        space_equivalence_check(seed=s + 2),
        linear_exactness_check(d=6, n=20, steps=20_000, thin=10, projections=50, min_pass=46, seed=s + 3),
        kl_anchor_check(instances=5, seed=s + 4, tamper=tamper),
        leapfrog_order_check(seed=s + 5),
        stepsize_scaling_check(ns=(16, 64, 256, 1024), steps=2000, seed=s + 6),
        delta_phi_decay_check(widths=(32, 128, 512), draws=20, seed=s + 7),
        kernel_convergence_check(kinds=("erf",), draws=5, seed=s + 8),
        diagnostics_calibration_check(S=50_000, seed=s + 9, rhat_S=2000),
    ]
