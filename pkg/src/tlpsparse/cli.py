"""Command-line interface: solve, bench, rip-bound, rd, gen-matrix.

File formats
------------
* matrices: the plain-text CSV of :mod:`tlpsparse.sensing` — header line
  "M,N", then M comma-separated rows, 17 significant digits;
* vectors: plain text, one value per line;
* solve results: JSON with the recovered vector and all traces;
* bench plans: JSON (see README for the schema); unknown keys are
  rejected so typos fail loudly.

Exit codes: 0 solver/tool completed (regardless of convergence status),
2 usage or input error, 3 dimension mismatch.  Worker count for bench is
taken from the TLPSPARSE_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import bench as bench_mod
from .penalty import PenaltyParams, relaxation_degree
from .sensing import gen_dct, gen_gaussian, load_matrix_csv, save_matrix_csv
from .solver import (SolverConfig, irls_constrained, irls_lq_baseline,
                     irls_tlp)
from .theory import rip_bound, stability_constants


class DimensionError(ValueError):
    """Input shapes disagree; maps to exit code 3."""


_SOLVE_KEYS = ("method", "a", "p", "q", "kappa", "lambda", "s", "c",
               "delta_scale", "eps0", "inner_tol", "inner_max",
               "outer_tol_step", "outer_tol_mag", "outer_max")

_PLAN_KEYS = ("kind", "family", "M", "N", "param", "sparsities", "trials",
              "threshold", "master_seed", "timing", "solvers",
              "a_grid", "p_grid", "sparsity")

_SPEC_KEYS = ("method", "label", "a", "p", "q", "kappa", "lambda", "c",
              "delta_scale", "eps0", "inner_tol", "inner_max",
              "outer_tol_step", "outer_tol_mag", "outer_max")


def _load_vector(path: str) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        vals = [float(line.strip()) for line in fh if line.strip()]
    if not vals:
        raise ValueError(f"no values found in {path}")
    return np.array(vals)


def _reject_unknown(d: dict, allowed, what: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ValueError(f"unknown {what} key(s): {', '.join(unknown)}")


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- solve

def _merged_solve_options(args) -> dict:
    opts: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_opts = json.load(fh)
        if not isinstance(file_opts, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
        _reject_unknown(file_opts, _SOLVE_KEYS, "config")
        opts.update(file_opts)
    for key in _SOLVE_KEYS:
        flag = getattr(args, key.replace("lambda", "lam"), None)
        if flag is not None:
            opts[key] = flag
    return opts


def cmd_solve(args) -> int:
    A = load_matrix_csv(args.matrix)
    M, N = A.shape
    opts = _merged_solve_options(args)
    method = opts.get("method", "tlp")
    if method not in ("tlp", "constrained", "lq"):
        raise ValueError(f"unknown method {method!r}")
    if "s" not in opts:
        raise ValueError("target sparsity --s is required")

    truth = None
    if args.truth:
        truth = _load_vector(args.truth)
        if truth.size != N:
            raise DimensionError(
                f"truth vector has length {truth.size}, matrix has N={N}")
        y = A.entries @ truth
    elif args.measurements:
        y = _load_vector(args.measurements)
        if y.size != M:
            raise DimensionError(
                f"measurement vector has length {y.size}, matrix has M={M}")
    else:
        raise ValueError("provide --truth or --measurements")
    if int(opts["s"]) >= N:
        raise DimensionError(f"s={opts['s']} must be below N={N}")

    cfg = SolverConfig(
        s=int(opts["s"]),
        lam=float(opts.get("lambda", 1e-6)),
        kappa=float(opts.get("kappa", 3.0)),
        delta_scale=float(opts.get("delta_scale", 2.0)),
        c=float(opts.get("c", 1e-6)),
        eps0=float(opts.get("eps0", 1.0)),
        inner_tol=float(opts.get("inner_tol", 1e-8)),
        inner_max=int(opts.get("inner_max", 20)),
        outer_tol_step=float(opts.get("outer_tol_step", 1e-8)),
        outer_tol_mag=float(opts.get("outer_tol_mag", 1e-8)),
        outer_max=int(opts.get("outer_max", 2000)))

    t0 = time.perf_counter()
    if method == "lq":
        result = irls_lq_baseline(A, y, float(opts.get("q", 0.5)), cfg)
    else:
        params = PenaltyParams(float(opts.get("a", 1.0)),
                               float(opts.get("p", 0.7)))
        if method == "tlp":
            result = irls_tlp(A, y, params, cfg)
        else:
            result = irls_constrained(A, y, params, cfg)
    elapsed_ms = (time.perf_counter() - t0) * 1e3

    payload = result.to_dict()
    payload["wall_time_ms"] = elapsed_ms
    payload["rel_err"] = (
        float(np.linalg.norm(result.x - truth) / np.linalg.norm(truth))
        if truth is not None and np.any(truth) else None)
    _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


# ---------------------------------------------------------------- bench

def _parse_spec(d: dict) -> bench_mod.SolverSpec:
    _reject_unknown(d, _SPEC_KEYS, "solver spec")
    d = dict(d)
    if "lambda" in d:
        d["lam"] = d.pop("lambda")
    return bench_mod.SolverSpec(**d)


def parse_plan_file(path: str, trials=None, seed=None, threshold=None):
    """Load and validate a plan file; returns (kind, plan, raw dict).

    The optional arguments override the corresponding plan fields (the
    flag-beats-file rule).
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: plan must be a JSON object")
    _reject_unknown(raw, _PLAN_KEYS, "plan")
    kind = raw.get("kind", "success_rate")
    if kind not in ("success_rate", "sweep"):
        raise ValueError(f"unknown plan kind {kind!r}")
    if kind == "sweep":
        for key in ("a_grid", "p_grid", "sparsity"):
            if key not in raw:
                raise ValueError(f"sweep plan requires {key!r}")

    trials = trials if trials is not None else raw.get("trials", 20)
    seed = seed if seed is not None else raw.get("master_seed", 0)
    threshold = (threshold if threshold is not None
                 else raw.get("threshold", 1e-3))
    solvers = tuple(_parse_spec(d) for d in raw.get("solvers",
                                                    [{"method": "tlp"}]))
    sparsities = raw.get("sparsities", [raw.get("sparsity", 1)])
    plan = bench_mod.ExperimentPlan(
        family=raw["family"], M=int(raw["M"]), N=int(raw["N"]),
        param=float(raw.get("param", 0.0)),
        sparsities=tuple(int(s) for s in sparsities),
        trials=int(trials), solvers=solvers, threshold=float(threshold),
        master_seed=int(seed), timing=bool(raw.get("timing", True)))
    return kind, plan, raw


def cmd_bench(args) -> int:
    kind, plan, raw = parse_plan_file(args.plan, trials=args.trials,
                                      seed=args.seed,
                                      threshold=args.threshold)
    if kind == "sweep":
        rows = bench_mod.parameter_sweep(
            raw["a_grid"], raw["p_grid"], int(raw["sparsity"]), plan)
        _write_text(bench_mod.sweep_to_csv(rows), args.out)
    else:
        result = bench_mod.run_experiment(plan)
        _write_text(bench_mod.to_csv(result), args.out)
    return 0


# ---------------------------------------------------------------- theory

def cmd_rip_bound(args) -> int:
    bound = rip_bound(PenaltyParams(args.a, args.p), args.gamma)
    payload = {"eta0": bound.eta0, "mu0": bound.mu0,
               "delta_bound": bound.delta_bound}
    if args.delta2s is not None:
        consts = stability_constants(bound, args.delta2s)
        payload.update({"C0": consts.c0, "C1": consts.c1, "C2": consts.c2})
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_rd(args) -> int:
    value = relaxation_degree(args.kind, PenaltyParams(args.a, args.p),
                              args.N)
    sys.stdout.write(f"{value!r}\n")
    return 0


def cmd_gen_matrix(args) -> int:
    if args.family == "gaussian":
        A = gen_gaussian(args.M, args.N, args.param, args.seed)
    else:
        A = gen_dct(args.M, args.N, args.param, args.seed)
    save_matrix_csv(A, args.out)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlpsparse",
        description="Sparse recovery with the transformed-lp penalty")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="recover a signal from a matrix file")
    ps.add_argument("--matrix", required=True)
    ps.add_argument("--truth", help="ground-truth vector file; y = A x")
    ps.add_argument("--measurements", help="measurement vector file")
    ps.add_argument("--config", help="JSON file with solver options")
    ps.add_argument("--out", help="write result JSON here (default stdout)")
    ps.add_argument("--method", choices=("tlp", "constrained", "lq"))
    ps.add_argument("--a", type=float)
    ps.add_argument("--p", type=float)
    ps.add_argument("--q", type=float)
    ps.add_argument("--kappa", type=float)
    ps.add_argument("--lambda", type=float, dest="lam")
    ps.add_argument("--s", type=int)
    ps.add_argument("--c", type=float)
    ps.add_argument("--delta-scale", type=float, dest="delta_scale")
    ps.add_argument("--eps0", type=float)
    ps.add_argument("--inner-tol", type=float, dest="inner_tol")
    ps.add_argument("--inner-max", type=int, dest="inner_max")
    ps.add_argument("--outer-tol-step", type=float, dest="outer_tol_step")
    ps.add_argument("--outer-tol-mag", type=float, dest="outer_tol_mag")
    ps.add_argument("--outer-max", type=int, dest="outer_max")
    ps.set_defaults(func=cmd_solve)

    pb = sub.add_parser("bench", help="run a success-rate plan file")
    pb.add_argument("--plan", required=True)
    pb.add_argument("--out", help="write CSV here (default stdout)")
    pb.add_argument("--trials", type=int)
    pb.add_argument("--seed", type=int)
    pb.add_argument("--threshold", type=float)
    pb.set_defaults(func=cmd_bench)

    pr = sub.add_parser("rip-bound", help="recovery bound and constants")
    pr.add_argument("--a", type=float, required=True)
    pr.add_argument("--p", type=float, required=True)
    pr.add_argument("--gamma", type=float, default=1.0)
    pr.add_argument("--delta2s", type=float)
    pr.set_defaults(func=cmd_rip_bound)

    pd = sub.add_parser("rd", help="relaxation degree of a penalty")
    pd.add_argument("--kind", choices=("tlp", "lp", "lap"), required=True)
    pd.add_argument("--a", type=float, required=True)
    pd.add_argument("--p", type=float, required=True)
    pd.add_argument("--N", type=int, required=True)
    pd.set_defaults(func=cmd_rd)

    pg = sub.add_parser("gen-matrix", help="generate a matrix CSV file")
    pg.add_argument("--family", choices=("gaussian", "dct"), required=True)
    pg.add_argument("--M", type=int, required=True)
    pg.add_argument("--N", type=int, required=True)
    pg.add_argument("--param", type=float, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=cmd_gen_matrix)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, OSError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
