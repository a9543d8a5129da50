import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from widebnn.data import linear_regression
from widebnn.linear import (
    GaussianDist,
    exact_hamiltonian_flow,
    gaussian_kl,
    hamiltonian,
    linear_posterior,
    potential_terms,
    stepsize_bound,
)

FIG_X = np.array([[0.9, 0.5]])


def test_zero_design_gives_prior():
    post = linear_posterior(np.zeros((3, 2)), np.ones(3), 0.1)
    np.testing.assert_array_equal(post.mean, 0.0)
    np.testing.assert_allclose(post.cov, np.eye(2))


def test_fig_instance_posterior():
    post = linear_posterior(FIG_X, [2.0], 0.1)
    np.testing.assert_allclose(post.mean, [1.5517241, 0.8620690], atol=1e-6)
    np.testing.assert_allclose(post.cov, np.array([[3.5, -4.5], [-4.5, 9.1]]) / 11.6, rtol=1e-12)


def test_infinite_noise_is_prior():
    post = linear_posterior(FIG_X, [2.0], math.inf)
    np.testing.assert_allclose(post.cov, np.eye(2))
    post = linear_posterior(FIG_X, [2.0], 1e12)
    np.testing.assert_allclose(post.cov, np.eye(2), atol=1e-11)


def test_gaussian_kl_examples():
    std = GaussianDist.standard(3)
    assert gaussian_kl(std, std) == pytest.approx(0.0, abs=1e-15)
    m = np.array([1.0, -2.0, 0.5])
    assert gaussian_kl(std, GaussianDist(m, np.eye(3))) == pytest.approx(0.5 * m @ m)
    val = gaussian_kl(GaussianDist.standard(1), GaussianDist(np.zeros(1), np.array([[2.0]])))
    assert val == pytest.approx(0.5 * (0.5 - 1 + math.log(2)), rel=1e-12)
    assert val == pytest.approx(0.09657, abs=1e-5)


def test_harmonic_oscillator():
    z0, m0 = np.array([0.3, -1.0]), np.array([0.5, 2.0])
    for t in (0.0, 0.4, 2.0):
        z, m = exact_hamiltonian_flow(np.eye(2), np.zeros(2), z0, m0, t)
        np.testing.assert_allclose(z, math.sin(t) * m0 + math.cos(t) * z0, atol=1e-14)
    z, m = exact_hamiltonian_flow(np.eye(2), np.zeros(2), z0, m0, 0.0)
    np.testing.assert_array_equal(z, z0)
    np.testing.assert_array_equal(m, m0)


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_flow_conserves_energy(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((4, 4))
    C = G @ G.T + 0.1 * np.eye(4)
    b, z0, m0 = rng.standard_normal((3, 4))
    H0 = hamiltonian(C, b, z0, m0)
    for t in np.arange(1, 11) / 10:
        z, m = exact_hamiltonian_flow(C, b, z0, m0, t)
        assert hamiltonian(C, b, z, m) == pytest.approx(H0, rel=1e-10, abs=1e-10)


def test_flow_time_reversal(rng):
    X, y = rng.standard_normal((5, 3)), rng.standard_normal(5)
    C, b = potential_terms(X, y, 0.5)
    z0, m0 = rng.standard_normal((2, 3))
    z, m = exact_hamiltonian_flow(C, b, z0, m0, 0.7)
    zb, mb = exact_hamiltonian_flow(C, b, z, -m, 0.7)
    np.testing.assert_allclose(zb, z0, atol=1e-12)
    np.testing.assert_allclose(mb, -m0, atol=1e-12)


def test_stepsize_bound_examples():
    assert stepsize_bound(np.zeros((0, 3)), 0.1) == 1.0
    assert stepsize_bound(FIG_X, 0.1) == pytest.approx(11.6**-0.5, rel=1e-12)
    assert 11.6**-0.5 == pytest.approx(0.29361, abs=1e-5)


def test_stepsize_bound_scaling():
    b1 = stepsize_bound(linear_regression(2000, 5, seed=0).X, 0.01)
    b4 = stepsize_bound(linear_regression(8000, 5, seed=1).X, 0.01)
    assert b1 / b4 == pytest.approx(2.0, rel=0.1)
