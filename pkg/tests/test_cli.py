import csv
import json

import numpy as np
import pytest

from widebnn import cli, experiments
from widebnn.config import ExperimentConfig
from widebnn.data import linear_regression
from widebnn.errors import DimensionMismatch
from widebnn.io import read_samples
from widebnn.model import NetworkSpec, init_prior, log_post_standard
from widebnn.reprior import inverse_repriorise, log_density_reparam

LINEAR_DEMO = {
    "parametrisation": "repriorised",
    "network": {"widths": []},
    "data": {"source": "linear", "n": 30, "input_dim": 4},
    "sampler": {"stepsize": 0.5, "damping": 0.0, "steps": 4000, "burn_in": 200, "thin": 10, "chains": 2},
    "projections": 20,
}

SMALL_NET = {
    "network": {"widths": [16]},
    "data": {"source": "gaussian-blobs", "n": 12, "input_dim": 2, "num_classes": 2, "test_points": 3},
    "sampler": {"stepsize": 0.002, "steps": 600, "burn_in": 100, "thin": 5, "chains": 2},
    "projections": 10,
}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc), encoding="utf-8")
    return str(p)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_linear_demo_sample(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["sample", "--config", write_config(tmp_path, LINEAR_DEMO), "--out", str(out)]) == 0
    diag = json.loads((out / "diagnostics.json").read_text())
    assert min(diag["ess"]["theta"]["per_projection"]) >= 0.5
    assert set(diag) >= {"config", "ess", "rhat", "acceptance", "runtime"}
    assert "per_dim_quantiles" in diag["rhat"]
    samples, meta = read_samples(out / "samples_chain0.bin")
    assert samples.shape == ((4000 - 200) // 10, 5)  # 4 inputs plus the bias row
    assert meta["parameters"] == "theta"
    trace = read_csv(out / "trace.csv")
    assert len(trace) == 2 * 4000
    assert float(trace[0]["delta_phi_norm"]) <= 1e-10
    assert ExperimentConfig.from_dict(json.loads((out / "config.json").read_text())).parametrisation == "repriorised"


def test_sample_is_reproducible(tmp_path):
    cfg = write_config(tmp_path, SMALL_NET)
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert cli.main(["sample", "--config", cfg, "--out", str(o), "--seed", "5"]) == 0
    for name in ("diagnostics.json", "trace.csv", "config.json", "samples_chain0.bin", "samples_chain1.bin"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    diag = json.loads((outs[0] / "diagnostics.json").read_text())
    assert "f_test" in diag["ess"]
    assert read_csv(outs[0] / "trace.csv")[0]["delta_phi_norm"] == ""


def test_paired_standard_and_repriorised(tmp_path):
    reports = {}
    for param in ("standard", "repriorised"):
        doc = {**SMALL_NET, "parametrisation": param}
        out = tmp_path / param
        assert cli.main(["sample", "--config", write_config(tmp_path, doc, param + ".json"), "--out", str(out)]) == 0
        reports[param] = json.loads((out / "diagnostics.json").read_text())
    assert all(r["ess"]["theta"]["mean"] > 0 for r in reports.values())


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"parametrisation": "standard", "lam": 0.1})
    assert cli.main(["sample", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "lam" in capsys.readouterr().err


def test_runtime_failure_exit_code(tmp_path):
    doc = {**SMALL_NET, "sampler": {**SMALL_NET["sampler"], "stepsize": 1e6}}
    assert cli.main(["sample", "--config", write_config(tmp_path, doc), "--out", str(tmp_path / "o")]) == 2


def test_bench(tmp_path):
    doc = {"data": {"n": 16}, "bench": {"widths": [32], "steps": 20, "warmup": 2}}
    out = tmp_path / "b"
    assert cli.main(["bench", "--config", write_config(tmp_path, doc), "--out", str(out), "--widths", "128", "512"]) == 0
    rows = read_csv(out / "bench.csv")
    assert len(rows) == 4
    assert [r["parametrisation"] for r in rows] == ["standard", "repriorised"] * 2
    t = {(int(r["width"]), r["parametrisation"]): float(r["median_step_seconds"]) for r in rows}
    assert t[(512, "standard")] > t[(128, "standard")]
    assert t[(512, "repriorised")] > t[(128, "repriorised")]
    assert all(float(r["overhead_ratio"]) > 0 for r in rows)


def test_slice_grid(tmp_path):
    doc = {"network": {"widths": [8]}, "data": {"n": 10, "input_dim": 2, "num_classes": 2}, "slice": {"resolution": 4}}
    out = tmp_path / "s"
    assert cli.main(["slice", "--config", write_config(tmp_path, doc), "--out", str(out)]) == 0
    rows = read_csv(out / "slice.csv")
    assert len(rows) == 5 * 6 // 2


def test_slice_corners_are_exact(tmp_path):
    data = linear_regression(12, 3, seed=0, noise=0.1)
    spec = NetworkSpec.fcn(3, (6,), 1, "gelu")
    thetas = [init_prior(spec, s) for s in range(3)]
    rows = experiments.slice_rows(spec, data, thetas, 3, None)
    corners = {(0.0, 0.0): 0, (1.0, 0.0): 1, (0.0, 1.0): 2}
    for u, v, lp_std, lp_rep in rows:
        if (u, v) in corners:
            th = thetas[corners[(u, v)]]
            assert lp_std == log_post_standard(spec, th, data)[0]
            phi = inverse_repriorise(spec, th, data)
            assert lp_rep == pytest.approx(log_density_reparam(spec, phi, data)[0], rel=1e-12)


def test_linear_slice_is_quadratic_bowl():
    data = linear_regression(15, 3, seed=1, noise=0.05)
    spec = NetworkSpec.linear(3, 1, 0.2)
    rng = np.random.default_rng(0)
    thetas = [rng.standard_normal(spec.num_params) for _ in range(3)]
    rows = experiments.slice_rows(spec, data, thetas, 5)
    phis = [inverse_repriorise(spec, t, data) for t in thetas]
    pts = [p for _, _, p in experiments.triangle_points(*phis, 5)]
    offsets = [r[3] + 0.5 * p @ p for r, p in zip(rows, pts)]
    np.testing.assert_allclose(offsets, offsets[0], atol=1e-9)


def test_slice_dimension_mismatch():
    data = linear_regression(5, 2)
    spec = NetworkSpec.linear(2)
    with pytest.raises(DimensionMismatch):
        experiments.slice_rows(spec, data, [np.zeros(3), np.zeros(3), np.zeros(4)], 2)


def test_slice_bad_param_file_exit_code(tmp_path):
    for k, n in enumerate((3, 3, 5)):
        np.savetxt(tmp_path / f"p{k}.txt", np.zeros(n))
    doc = {"network": {"widths": []}, "data": {"source": "linear", "n": 5, "input_dim": 2}, "slice": {"param_files": [str(tmp_path / f"p{k}.txt") for k in range(3)]}}
    assert cli.main(["slice", "--config", write_config(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1


def test_triangle_point_count_and_corners(rng):
    a, b, c = rng.standard_normal((3, 5))
    pts = list(experiments.triangle_points(a, b, c, 6))
    assert len(pts) == 7 * 8 // 2
    by_uv = {(u, v): p for u, v, p in pts}
    assert np.array_equal(by_uv[(0.0, 0.0)], a)
    assert np.array_equal(by_uv[(1.0, 0.0)], b)
    assert np.array_equal(by_uv[(0.0, 1.0)], c)


def test_verify_and_negative_control(tmp_path):
    out = tmp_path / "v"
    assert cli.main(["verify", "--out", str(out)]) == 0
    report = json.loads((out / "verify.json").read_text())
    assert report["passed"] and all(c["passed"] for c in report["checks"])
    assert cli.main(["verify", "--out", str(tmp_path / "t"), "--tamper-noise", "1e-3"]) == 3
    tampered = json.loads((tmp_path / "t" / "verify.json").read_text())
    failed = [c["name"] for c in tampered["checks"] if not c["passed"]]
    assert failed == ["kl-anchor"]


def test_verify_seed_variation(tmp_path):
    assert cli.main(["verify", "--out", str(tmp_path / "s"), "--seed", "17"]) == 0


def test_tune_stepsize_meets_target():
    data = linear_regression(40, 3, seed=0, noise=0.01)
    spec = NetworkSpec.linear(3)
    target, _ = experiments.make_target(spec, data, "standard")
    eps = experiments.tune_stepsize(target, np.zeros(spec.num_params), 0.9, pilot_steps=300)
    cfg = experiments.LmcConfig(stepsize=eps, damping=0.9, steps=3000, burn_in=300)
    run = experiments.run_tuned(lambda: target, spec.num_params, cfg)
    assert run.stores[0].mean_acceptance >= experiments.ACCEPTANCE_FLOOR


def test_largest_stepsize_bisection():
    eps = experiments.largest_stepsize(lambda e: 1.0 if e <= 0.3 else 0.0, 0.98, 1e-4, 2.0, iters=40)
    assert eps == pytest.approx(0.3, rel=1e-6)
