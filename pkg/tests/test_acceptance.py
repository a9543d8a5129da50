"""The thirteen acceptance criteria at full size.

Each test prints one ``[PASS]``/``[FAIL]`` line, shown even when pytest
captures output. Criteria 9, 10 and 13 are slow (about 20 minutes together on
one core); deselect them with ``-m "not slow"``. Running this file directly
prints the same lines without pytest.
"""

import sys

import pytest

from widebnn import checks


@pytest.fixture
def report(capsys):
    def emit(number, result, max_seconds=None):
        line = f"criterion {number:>2} {result.line()} [{result.seconds:.1f}s]"
        with capsys.disabled():
            print("\n" + line)
        assert result.passed, line
        if max_seconds is not None:
            assert result.seconds < max_seconds, f"criterion {number} took {result.seconds:.0f}s (limit {max_seconds}s)"

    return emit


def test_c01_gradient_correctness(report):
    report(1, checks.gradient_check(instances=20), max_seconds=120)


def test_c02_path_agreement(report):
    report(2, checks.path_agreement_check(instances=20))


def test_c03_feature_data_space_equivalence(report):
    report(3, checks.space_equivalence_check())


def test_c04_linear_model_exactness(report):
    report(4, checks.linear_exactness_check())


def test_c05_kl_anchor(report):
    report(5, checks.kl_anchor_check(instances=20))


def test_c06_leapfrog_order(report):
    report(6, checks.leapfrog_order_check())


def test_c07_stepsize_scaling(report):
    report(7, checks.stepsize_scaling_check())


def test_c08_delta_phi_width_decay(report):
    report(8, checks.delta_phi_decay_check(), max_seconds=600)


@pytest.mark.slow
def test_c09_mixing_speed(report):
    report(9, checks.mixing_check(), max_seconds=3600)


@pytest.mark.slow
def test_c10_same_distribution_rhat(report):
    report(10, checks.rhat_check())


def test_c11_kernel_convergence(report):
    report(11, checks.kernel_convergence_check(kinds=("erf", "gelu")))


def test_c12_diagnostics_calibration(report):
    report(12, checks.diagnostics_calibration_check())


@pytest.mark.slow
def test_c13_benchmark_overhead(report):
    report(13, checks.overhead_check())


CRITERIA = [
    (1, lambda: checks.gradient_check(instances=20)),
    (2, lambda: checks.path_agreement_check(instances=20)),
    (3, checks.space_equivalence_check),
    (4, checks.linear_exactness_check),
    (5, lambda: checks.kl_anchor_check(instances=20)),
    (6, checks.leapfrog_order_check),
    (7, checks.stepsize_scaling_check),
    (8, checks.delta_phi_decay_check),
    (9, checks.mixing_check),
    (10, checks.rhat_check),
    (11, checks.kernel_convergence_check),
    (12, checks.diagnostics_calibration_check),
    (13, checks.overhead_check),
]


if __name__ == "__main__":
    failed = 0
    for number, fn in CRITERIA:
        r = fn()
        failed += not r.passed
        print(f"criterion {number:>2} {r.line()} [{r.seconds:.1f}s]", flush=True)
    sys.exit(1 if failed else 0)
