"""Command-line entry point ``ntk-spectrum``.

Exit codes: 0 when every check passes, 1 when a property check fails,
2 for invalid arguments or configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .bounds import (
    BoundConstants, deep_lambda_lower, shallow_bound_report,
    uniform_bounds, width_requirement_deep,
)
from .errors import ConfigError, DomainError
from .experiments import EXPERIMENTS, SCHEMA_VERSION, ExperimentConfig, run_experiment
from .kernel_limit import limiting_kernel_matrix, limiting_kernel_mc, mercer_series_entry
from .linalg import KernelMatrix
from .ntk import deep_ntk_decomposed, init_deep, init_shallow, shallow_ntk
from .specfun import Activation
from .sphere import load_dataset, operator_norm, sample_uniform_sphere, separation_stats

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--threads", type=int, default=1)


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _constants(cfg: dict) -> BoundConstants:
    return BoundConstants.from_dict(cfg.get("constants"))


def _dump(obj) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2)


def _kernel_output(K: KernelMatrix, fmt: str, extra: dict | None = None) -> str:
    if fmt == "csv":
        return K.to_csv()
    rep = K.eigen_report()
    obj = {"n": K.n, "entries": K.entries.tolist(),
           "eigen": {"lambda_min": rep.lambda_min, "clamped": rep.clamped}}
    obj.update(extra or {})
    return _dump(obj)


def cmd_gen_data(a, cfg) -> int:
    seed = a.seed if a.seed is not None else cfg.get("seed", 0)
    data = sample_uniform_sphere(a.dim, a.n, seed)
    _emit(data.to_csv() if a.format == "csv" else data.to_json(), a.out)
    return EXIT_OK


def _delta_from(a):
    if a.data:
        data = load_dataset(a.data)
        st = separation_stats(data)
        return data, st.delta, st.delta_prime
    if a.delta is None:
        raise ConfigError("give --delta or --data")
    return None, a.delta, a.delta


def cmd_bounds(a, cfg) -> int:
    consts = _constants(cfg)
    if a.kind == "uniform":
        lam, upper = uniform_bounds(a.dim, a.n, a.eps)
        obj = {"kind": "uniform", "d": a.dim, "n": a.n, "eps": a.eps,
               "lambda_lower": lam, "lambda_upper": upper}
    elif a.kind == "shallow":
        data, delta, delta_prime = _delta_from(a)
        d = data.dim if data else a.dim
        n = data.n if data else a.n
        opsq = operator_norm(data) ** 2 if data else float(a.opnorm_sq or n)
        obj = {"kind": "shallow", **shallow_bound_report(d, n, delta, delta_prime, opsq,
                                                         a.eps, consts).to_dict()}
    else:
        data, delta, _ = _delta_from(a)
        d0 = data.dim if data else a.dim
        n = data.n if data else a.n
        d1, dl = width_requirement_deep(n, d0, delta, a.layers, a.eps, consts)
        obj = {"kind": "deep", "d0": d0, "n": n, "L": a.layers, "delta": delta, "eps": a.eps,
               "lambda_lower": deep_lambda_lower(d0, delta), "d1_required": d1,
               "d_last_required": dl, "constants": asdict(consts)}
    if a.format == "csv":
        flat = {k: v for k, v in obj.items() if not isinstance(v, dict)}
        _emit("quantity,value\n" + "".join(f"{k},{v}\n" for k, v in flat.items()), a.out)
    else:
        _emit(_dump(obj), a.out)
    return EXIT_OK


def cmd_kernel(a, cfg) -> int:
    data = load_dataset(a.data)
    psi = Activation.parse(a.activation)
    extra = {"activation": psi.value}
    if a.kind == "closed":
        K = limiting_kernel_matrix(psi, data)
    elif a.kind == "mc":
        seed = a.seed if a.seed is not None else cfg.get("seed", 0)
        mc = limiting_kernel_mc(psi, data, a.samples, seed, threads=a.threads)
        K = mc.matrix
        extra["stderr"] = mc.stderr.tolist()
        extra["samples"] = a.samples
    else:
        G = data.gram()
        entries = np.array([[mercer_series_entry(psi, data.dim, t, a.R) for t in row] for row in G])
        K = KernelMatrix(entries)
        extra["R"] = a.R
    _emit(_kernel_output(K, a.format, extra), a.out)
    return EXIT_OK


def cmd_ntk(a, cfg) -> int:
    data = load_dataset(a.data)
    seed = a.seed if a.seed is not None else cfg.get("seed", 0)
    if a.kind == "shallow":
        parts = shallow_ntk(init_shallow(data.dim, a.width, seed), data)
        extra = {"lambda_min_K1": parts.K1.eigen_report().lambda_min,
                 "lambda_min_K2": parts.K2.eigen_report().lambda_min, "d1": a.width}
        _emit(_kernel_output(parts.K, a.format, extra), a.out)
    else:
        widths = [data.dim] + [int(w) for w in a.widths.split(",")]
        p = init_deep(widths, seed)
        K = deep_ntk_decomposed(p, data)
        raw = deep_ntk_decomposed(p, data, normalized=False)
        extra = {"widths": widths, "raw_entries": raw.entries.tolist(),
                 "normalization": p.normalization}
        _emit(_kernel_output(K, a.format, extra), a.out)
    return EXIT_OK


def cmd_verify(a, cfg) -> int:
    obj = dict(cfg)
    obj["experiment"] = a.experiment
    if a.seed is not None:
        obj["seed"] = a.seed
    if a.threads != 1 or "threads" not in obj:
        obj["threads"] = a.threads
    config = ExperimentConfig.from_dict(obj)
    report = run_experiment(config)
    text = report.to_csv() if a.format == "csv" else report.to_json()
    _emit(text, a.out)
    if config.output_csv:
        Path(config.output_csv).write_text(report.to_csv())
    if config.output_json:
        Path(config.output_json).write_text(report.to_json())
    for c in report.checks:
        print(f"{c.name}: {'PASS' if c.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_audit(a, cfg) -> int:
    grid = dict(cfg.get("grid") or {})
    if a.dims:
        lo, _, hi = a.dims.partition("-")
        grid["d"] = list(range(int(lo), int(hi or lo) + 1))
    if a.rmax is not None:
        grid["r_max"] = a.rmax
    a.experiment = "funk-hecke-audit"
    return cmd_verify(a, {**cfg, "grid": grid})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ntk-spectrum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="sample uniform points on the sphere")
    _common(p)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("bounds", help="evaluate eigenvalue bound formulas")
    p.add_argument("kind", choices=("shallow", "deep", "uniform"))
    _common(p)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--delta", type=float)
    p.add_argument("--data", help="dataset file; overrides --dim, --n, --delta")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--opnorm-sq", type=float, dest="opnorm_sq")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("kernel", help="limiting kernel matrices")
    p.add_argument("kind", choices=("closed", "mc", "series"))
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--activation", default="relu-derivative",
                   choices=[m.value for m in Activation])
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--R", type=int, default=200)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("ntk", help="finite-width NTK Gram matrices")
    p.add_argument("kind", choices=("shallow", "deep"))
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--width", type=int, default=1024, help="hidden width (shallow)")
    p.add_argument("--widths", default="64,32", help="comma-separated d1..d_{L-1} (deep)")
    p.set_defaults(func=cmd_ntk)

    p = sub.add_parser("verify", help="run a verification experiment")
    p.add_argument("experiment", choices=EXPERIMENTS)
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", help="audit special-function identities")
    p.add_argument("target", choices=("funk-hecke",))
    _common(p)
    p.add_argument("--dims", help="dimension range such as 3-12")
    p.add_argument("--rmax", type=int)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, DomainError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
