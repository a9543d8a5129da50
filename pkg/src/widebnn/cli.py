"""Command line: ``widebnn sample|bench|slice|verify --config PATH --out DIR [--seed N]``.

Exit codes: 0 success, 1 invalid configuration or input, 2 runtime failure,
3 verify checks failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import checks, experiments
from .config import ExperimentConfig
from .errors import ConfigError, DimensionMismatch, LabelOutOfRange, MalformedCsv
from .io import fmt, load_vector, write_samples
from .model import init_prior

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _metadata(command: str, started: float, extra: dict) -> dict:
    return {
        "command": command,
        "started_unix": started,
        "wall_seconds": time.time() - started,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        **extra,
    }


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig().validate()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def cmd_sample(cfg: ExperimentConfig, out: Path) -> int:
    started = time.time()
    res = experiments.run_sampling(cfg)
    for s in res.stores:
        write_samples(
            out / f"samples_chain{s.chain_id}.bin",
            s.positions,
            {"chain_id": s.chain_id, "parameters": "theta", "num_params": res.spec.num_params, "sampler": s.config},
        )
    _write_json(out / "diagnostics.json", res.report.to_dict())
    rows = []
    repriorised = cfg.parametrisation == "repriorised"
    for s in res.stores:
        for t in range(s.trace_log_density.shape[0]):
            gap = s.trace_score_gap[t] if repriorised else None
            rows.append((s.chain_id, t + 1, fmt(s.trace_log_density[t]), fmt(s.trace_accept_prob[t]), fmt(gap)))
    _write_csv(out / "trace.csv", ("chain", "step", "log_density", "accept_prob", "delta_phi_norm"), rows)
    _write_json(out / "config.json", cfg.to_dict())
    _write_json(
        out / "metadata.json",
        _metadata(
            "sample",
            started,
            {
                "stepsize": res.stepsize,
                "tune_seconds": res.tune_seconds,
                "sample_seconds": res.sample_seconds,
                "dataset": res.data.label,
                "feature_standardisation": "per-column zero mean, unit variance" if cfg.data.source != "synthetic-1d" else "none",
            },
        ),
    )
    acc = res.report.acceptance["mean_post_burnin"]
    print(f"wrote {len(res.stores)} chain(s) to {out}; stepsize {res.stepsize:.4g}, mean acceptance {acc:.4f}")
    return EXIT_OK


def cmd_bench(cfg: ExperimentConfig, out: Path, widths=None) -> int:
    started = time.time()
    rows = experiments.benchmark(cfg, widths)
    header = ("width", "parametrisation", "median_step_seconds", "steps", "overhead_ratio")
    _write_csv(out / "bench.csv", header, [(r["width"], r["parametrisation"], fmt(r["median_step_seconds"]), r["steps"], fmt(r["overhead_ratio"])) for r in rows])
    _write_json(out / "metadata.json", _metadata("bench", started, {}))
    for r in rows:
        print(f"width {r['width']:>6} {r['parametrisation']:<12} {r['median_step_seconds'] * 1e3:9.3f} ms/step  x{r['overhead_ratio']:.2f}")
    return EXIT_OK


def cmd_slice(cfg: ExperimentConfig, out: Path) -> int:
    started = time.time()
    data, _ = experiments.make_dataset(cfg.data, cfg.noise)
    spec = experiments.make_spec(cfg.network, data)
    if cfg.slice.param_files:
        thetas = [load_vector(p) for p in cfg.slice.param_files]
    else:
        thetas = [init_prior(spec, cfg.seed + k) for k in range(3)]
    rows = experiments.slice_rows(spec, data, thetas, cfg.slice.resolution, cfg.lam)
    _write_csv(out / "slice.csv", ("u", "v", "logp_standard", "logp_repriorised"), [tuple(fmt(x) for x in r) for r in rows])
    _write_json(out / "metadata.json", _metadata("slice", started, {"rows": len(rows)}))
    print(f"wrote {len(rows)} grid points to {out / 'slice.csv'}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, out: Path, tamper: float = 0.0) -> int:
    started = time.time()
    results = checks.reduced_suite(cfg.seed, tamper)
    report = {"passed": all(r.passed for r in results), "checks": [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results]}
    _write_json(out / "verify.json", report)
    _write_json(out / "metadata.json", _metadata("verify", started, {"seconds": {r.name: r.seconds for r in results}}))
    for r in results:
        print(r.line())
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="widebnn", description="Wide Bayesian network sampling experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("sample", "bench", "slice", "verify"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON experiment config (defaults if omitted)")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name == "bench":
            s.add_argument("--widths", type=int, nargs="+", help="override bench.widths")
        if name == "verify":
            s.add_argument("--tamper-noise", type=float, default=0.0, help="negative control: perturb the noise variance in the KL anchor")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "sample":
            return cmd_sample(cfg, out)
        if args.command == "bench":
            return cmd_bench(cfg, out, args.widths)
        if args.command == "slice":
            return cmd_slice(cfg, out)
        return cmd_verify(cfg, out, args.tamper_noise)
    except (ConfigError, MalformedCsv, LabelOutOfRange, DimensionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
