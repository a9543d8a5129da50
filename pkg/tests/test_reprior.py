import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import fd_grad, max_rel_err
from widebnn.checks import random_instance
from widebnn.errors import PathUnavailable, TooFewSamples
from widebnn.model import Dataset, NetworkSpec, forward, init_prior, log_post_standard
from widebnn.reprior import (
    ReparamConfig,
    RepriorisedTarget,
    delta_phi,
    factorize,
    inverse_repriorise,
    kl_gaussian_reference_stats,
    log_density_reparam,
    repriorise,
    repriorise_data_space,
    sqrt_woodbury,
)

FIG_X = np.array([[0.9, 0.5]])


def fig_instance():
    return NetworkSpec.linear(2), Dataset(FIG_X, [2.0], 0.1)


def zero_embedding_instance(rng, d_out=2):
    # sigma_b = 0 in every layer and zero hidden weights give Psi = 0
    spec = NetworkSpec(2, (4,), d_out, (1.0, 1.0), (0.0, 0.0), "gelu")
    phi = rng.standard_normal(spec.num_params)
    phi[: spec.layout[0].b_offset] = 0.0
    data = Dataset(rng.standard_normal((3, 2)), rng.standard_normal((3, d_out)), 0.4)
    return spec, data, phi


def net_instance(rng, n=6, widths=(7,), d_out=2, noise=0.3):
    spec = NetworkSpec.fcn(3, widths, d_out, "gelu")
    data = Dataset(rng.standard_normal((n, 3)), rng.standard_normal((n, d_out)), noise)
    return spec, data, rng.standard_normal(spec.num_params)


def test_zero_embedding_is_identity(rng):
    spec, data, phi = zero_embedding_instance(rng)
    assert np.allclose(forward(spec, phi, data.X)[1], 0.0)
    theta, fact = repriorise(spec, phi, data)
    np.testing.assert_allclose(theta, phi, atol=1e-15)
    assert fact.log_abs_det == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(fact.U, math.sqrt(0.4) * np.eye(spec.embed_dim))


def test_fig_instance_mean():
    spec, data = fig_instance()
    theta, fact = repriorise(spec, np.zeros(3), data)
    np.testing.assert_allclose(theta[:2], [1.5517241, 0.8620690], atol=1e-6)
    np.testing.assert_allclose(theta[:2], FIG_X[0] * 2 / (0.1 + 1.06), rtol=1e-12)
    assert theta[2] == 0.0


def test_large_lambda_is_identity(rng):
    spec, data, phi = net_instance(rng)
    theta, _ = repriorise(spec, phi, data, ReparamConfig(lam=1e8))
    assert np.linalg.norm(theta - phi) / np.linalg.norm(phi) <= 1e-3


@settings(max_examples=15)
@given(st.integers(0, 2**31 - 1))
def test_round_trip(seed):
    rng = np.random.default_rng(seed)
    spec, data, phi = random_instance(rng, max_width=16, max_n=12)
    cfg = ReparamConfig(lam=float(rng.choice([data.noise, 0.7 * data.noise + 0.05])))
    back = inverse_repriorise(spec, repriorise(spec, phi, data, cfg)[0], data, cfg)
    assert np.linalg.norm(back - phi) <= 1e-10 * np.linalg.norm(phi)


def test_inverse_at_conditional_mean(rng):
    spec, data, phi = net_instance(rng)
    fact = factorize(spec, phi, data, ReparamConfig())
    theta = phi.copy()
    theta[spec.readout_offset :] = fact.mu.ravel()
    back = inverse_repriorise(spec, theta, data)
    np.testing.assert_allclose(spec.readout(back), 0.0, atol=1e-10)


def test_fig_instance_inverse_by_hand():
    spec, data = fig_instance()
    x, s2 = FIG_X[0], 0.1
    theta = np.array([0.3, -1.2, 0.0])
    # 2x2 problem by hand (bias column is zero and decouples)
    A = s2 * np.eye(2) + np.outer(x, x)
    mu = np.linalg.solve(A, x * 2.0)
    Sigma = s2 * np.linalg.inv(A)
    Lc = np.linalg.cholesky(np.linalg.inv(Sigma))  # Sigma^-1 = Lc Lc^T, so Lc^T is a valid inverse root
    phi = inverse_repriorise(spec, theta, data)
    np.testing.assert_allclose(phi[:2], Lc.T @ (theta[:2] - mu), rtol=1e-10)
    assert phi[2] == pytest.approx(0.0)


def test_conditional_pushforward_covariance(rng):
    spec, data, phi = net_instance(rng, d_out=1)
    lam = data.noise
    fact = factorize(spec, phi, data, ReparamConfig())
    # linear part of phi_out -> theta_out is sqrt(lam) U^-1
    J = math.sqrt(lam) * np.linalg.inv(fact.U)
    Psi = fact.Psi
    np.testing.assert_allclose(J @ J.T, lam * np.linalg.inv(lam * np.eye(Psi.shape[1]) + Psi.T @ Psi), rtol=1e-9, atol=1e-12)


def test_determinant_identity(rng):
    spec, data, phi = net_instance(rng, d_out=3)
    for lam in (data.noise, 0.05, 2.0):
        fact = factorize(spec, phi, data, ReparamConfig(lam=lam))
        D = spec.embed_dim
        _, logdet = np.linalg.slogdet(lam * np.eye(D) + fact.Psi.T @ fact.Psi)
        assert 2 * fact.log_abs_det / 3 + logdet == pytest.approx(D * math.log(lam), rel=1e-10)


@pytest.mark.parametrize("n, width", [(5, 8), (9, 8), (50, 3)])
def test_data_space_structured_matches_feature_space(n, width, rng):
    spec, data, phi = net_instance(rng, n=n, widths=(width,))
    theta_f, fact_f = repriorise(spec, phi, data)
    theta_d, fact_d = repriorise_data_space(spec, phi, data, ReparamConfig(space="data", data_method="structured"))
    assert np.linalg.norm(theta_d - theta_f) <= 1e-8 * np.linalg.norm(theta_f)
    assert fact_d.log_abs_det == pytest.approx(fact_f.log_abs_det, rel=1e-8)


@pytest.mark.parametrize("n, width", [(5, 8), (9, 8), (50, 3)])
def test_data_space_eigen_shares_mean_and_covariance(n, width, rng):
    spec, data, phi = net_instance(rng, n=n, widths=(width,), d_out=1)
    cfg = ReparamConfig(space="data")
    _, fact_f = repriorise(spec, phi, data)
    _, fact_d = repriorise_data_space(spec, phi, data, cfg)
    np.testing.assert_allclose(fact_d.mu, fact_f.mu, rtol=1e-8, atol=1e-10)
    assert fact_d.log_abs_det == pytest.approx(fact_f.log_abs_det, rel=1e-8)
    # the eigen root is symmetric; its square is the conditional covariance
    D = spec.embed_dim
    J = np.empty((D, D))
    base = repriorise_data_space(spec, phi, data, cfg)[0][spec.readout_offset :]
    for j in range(D):
        p = phi.copy()
        p[spec.readout_offset + j] += 1.0
        J[:, j] = repriorise_data_space(spec, p, data, cfg)[0][spec.readout_offset :] - base
    Psi = fact_f.Psi
    Sigma = data.noise * np.linalg.inv(data.noise * np.eye(D) + Psi.T @ Psi)
    np.testing.assert_allclose(J, J.T, atol=1e-10)
    np.testing.assert_allclose(J @ J, Sigma, atol=1e-9)


def test_data_space_zero_embedding(rng):
    spec, data, phi = zero_embedding_instance(rng)
    for method in ("eigen", "structured"):
        theta, fact = repriorise_data_space(spec, phi, data, ReparamConfig(space="data", data_method=method))
        np.testing.assert_allclose(theta, phi, atol=1e-14)
        assert fact.log_abs_det == pytest.approx(0.0, abs=1e-12)


def test_sqrt_woodbury_examples(rng):
    np.testing.assert_allclose(sqrt_woodbury(np.zeros((2, 4))), np.eye(4))
    assert sqrt_woodbury(np.array([[3.0]]))[0, 0] == pytest.approx(math.sqrt(10), rel=1e-14)
    A = rng.standard_normal((3, 7))
    R = sqrt_woodbury(A)
    target = np.eye(7) + A.T @ A
    assert np.linalg.norm(R @ R - target) / np.linalg.norm(target) <= 1e-10


def test_zero_embedding_density_is_prior(rng):
    spec, data, phi = zero_embedding_instance(rng)
    for path in ("general", "marginal"):
        v1, g = log_density_reparam(spec, phi, data, path=path)
        v0, _ = log_density_reparam(spec, np.zeros_like(phi), data, path=path)
        assert v1 - v0 == pytest.approx(-0.5 * phi @ phi, rel=1e-12)
        np.testing.assert_allclose(g, -phi, atol=1e-12)


def test_linear_model_gradient_is_minus_phi(rng):
    spec = NetworkSpec.linear(4, 2, 0.3)
    data = Dataset(rng.standard_normal((10, 4)), rng.standard_normal((10, 2)), 0.05)
    for _ in range(5):
        phi = 3 * rng.standard_normal(spec.num_params)
        for path in ("general", "marginal"):
            np.testing.assert_allclose(log_density_reparam(spec, phi, data, path=path)[1], -phi, atol=1e-10)


@pytest.mark.parametrize("n", [4, 20])  # data space and push-through marginal branches
def test_paths_agree_and_match_fd(n, rng):
    spec, data, phi = net_instance(rng, n=n, widths=(8,))
    phi2 = rng.standard_normal(spec.num_params)
    vg1, gg = log_density_reparam(spec, phi, data, path="general")
    vm1, gm = log_density_reparam(spec, phi, data, path="marginal")
    vg2, _ = log_density_reparam(spec, phi2, data, path="general")
    vm2, _ = log_density_reparam(spec, phi2, data, path="marginal")
    assert abs((vg1 - vg2) - (vm1 - vm2)) <= 1e-8 * max(1.0, abs(vg1 - vg2))
    assert max_rel_err(gg, gm) <= 1e-6
    fd = fd_grad(lambda p: log_density_reparam(spec, p, data, path="marginal")[0], phi)
    assert max_rel_err(gm, fd) <= 1e-5


def test_general_path_is_change_of_variables(rng):
    spec, data, phi = net_instance(rng)
    phi2 = rng.standard_normal(spec.num_params)

    def direct(p):
        theta, fact = repriorise(spec, p, data)
        return log_post_standard(spec, theta, data)[0] + fact.log_abs_det

    diff = log_density_reparam(spec, phi, data)[0] - log_density_reparam(spec, phi2, data)[0]
    assert diff == pytest.approx(direct(phi) - direct(phi2), rel=1e-10)


def test_general_path_with_regulariser_fd(rng):
    spec, data, phi = net_instance(rng)
    cfg = ReparamConfig(lam=0.8)
    _, g = log_density_reparam(spec, phi, data, cfg)
    fd = fd_grad(lambda p: log_density_reparam(spec, p, data, cfg)[0], phi)
    assert max_rel_err(g, fd) <= 1e-5


def test_marginal_requires_exact_lambda(rng):
    spec, data, phi = net_instance(rng)
    with pytest.raises(PathUnavailable):
        log_density_reparam(spec, phi, data, ReparamConfig(lam=0.5), path="marginal")
    with pytest.raises(PathUnavailable):
        RepriorisedTarget(spec, data, ReparamConfig(lam=0.5), path="marginal")


def test_target_path_selection(rng):
    spec, data, phi = net_instance(rng)
    assert RepriorisedTarget(spec, data).path == "marginal"
    assert RepriorisedTarget(spec, data, ReparamConfig(lam=0.5)).path == "general"
    t = RepriorisedTarget(spec, data)
    np.testing.assert_allclose(t.to_theta(phi), repriorise(spec, phi, data)[0])


def test_delta_phi_linear_and_zero(rng):
    spec = NetworkSpec.linear(3, 1, 0.2)
    data = Dataset(rng.standard_normal((7, 3)), rng.standard_normal(7), 0.1)
    delta, norm = delta_phi(spec, rng.standard_normal(spec.num_params), data)
    assert norm <= 1e-10
    spec, data, phi = zero_embedding_instance(rng)
    assert delta_phi(spec, phi, data)[1] <= 1e-12


def test_delta_phi_readout_block_is_zero(rng):
    spec, data, phi = net_instance(rng)
    delta, _ = delta_phi(spec, phi, data)
    np.testing.assert_allclose(spec.readout(delta), 0.0, atol=1e-10)


def test_delta_phi_shrinks_with_width():
    rng = np.random.default_rng(0)
    X, Y = rng.standard_normal((16, 2)), rng.standard_normal(16)
    med = {}
    for w in (32, 512):
        spec = NetworkSpec.fcn(2, (w,), 1, "gelu")
        data = Dataset(X, Y, 0.01)
        med[w] = np.median([delta_phi(spec, init_prior(spec, s), data)[1] for s in range(100)])
    assert med[512] < med[32]


def test_kl_reference_stats():
    rng = np.random.default_rng(0)
    s = kl_gaussian_reference_stats(rng.standard_normal((100_000, 2)))
    assert np.all(np.abs(s["mean"]) < 0.01) and np.all(np.abs(s["variance"] - 1) < 0.01)
    assert np.all(s["energy_distance"] < 1e-3)
    z = kl_gaussian_reference_stats(np.zeros((200, 1)))
    assert z["variance"][0] == 0.0 and z["degenerate"][0]
    shifted = kl_gaussian_reference_stats(3 + rng.standard_normal(5000))
    assert shifted["mean"][0] == pytest.approx(3, abs=0.05)
    assert shifted["energy_distance"][0] > 1.0
    with pytest.raises(TooFewSamples):
        kl_gaussian_reference_stats(np.zeros((99, 1)))
