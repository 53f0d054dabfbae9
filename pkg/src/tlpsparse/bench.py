"""Success-rate experiment harness.

A plan names a matrix family, a sparsity grid, a trial count, and one or
more solver configurations; the harness runs every (solver, sparsity,
trial) cell with a fresh matrix and a fresh signal, counts recoveries
below the relative-error threshold, and emits one CSV row per cell.

Per-trial random streams are derived from (master seed, canonical solver
id, sparsity, trial index), so the table is a pure function of the plan:
serial and parallel executions produce the same rows, and re-running a
plan file reproduces it byte for byte (timing column aside — disable
timing in the plan when byte identity matters).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .penalty import PenaltyParams
from .sensing import derive_seed, gen_dct, gen_gaussian, gen_signal
from .solver import SolverConfig, irls_constrained, irls_lq_baseline, irls_tlp

WORKERS_ENV = "TLPSPARSE_WORKERS"

CSV_HEADER = ("solver,a,p,kappa,family,M,N,param,sparsity,trials,"
              "successes,success_rate,mean_rel_err,mean_time_ms")
SWEEP_CSV_HEADER = "a,p,sparsity,success_rate"

_METHODS = ("tlp", "lq", "constrained")


@dataclass(frozen=True)
class SolverSpec:
    """One solver column of an experiment: method, penalty, and config."""

    method: str = "tlp"
    a: float = 1.0
    p: float = 0.7
    q: float = 0.5
    kappa: float = 3.0
    lam: float = 1e-6
    c: float = 1e-6
    delta_scale: float = 2.0
    eps0: float = 1.0
    inner_tol: float = 1e-8
    inner_max: int = 20
    outer_tol_step: float = 1e-8
    outer_tol_mag: float = 1e-8
    outer_max: int = 2000
    label: str | None = None

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}")
        if self.label and "," in self.label:
            raise ValueError("solver label must not contain commas")

    @property
    def canonical_id(self) -> str:
        # seed derivation keys off this, never off the display label;
        # comma-free so it can sit in the first CSV column
        if self.method == "lq":
            return f"lq(q={self.q:g};kappa={self.kappa:g})"
        return (f"{self.method}(a={self.a:g};p={self.p:g};"
                f"kappa={self.kappa:g})")

    @property
    def display(self) -> str:
        return self.label if self.label else self.canonical_id

    def config(self, s: int) -> SolverConfig:
        return SolverConfig(
            s=s, lam=self.lam, kappa=self.kappa,
            delta_scale=self.delta_scale, c=self.c, eps0=self.eps0,
            inner_tol=self.inner_tol, inner_max=self.inner_max,
            outer_tol_step=self.outer_tol_step,
            outer_tol_mag=self.outer_tol_mag, outer_max=self.outer_max)


@dataclass(frozen=True)
class ExperimentPlan:
    """Full description of a success-rate experiment."""

    family: str
    M: int
    N: int
    param: float
    sparsities: tuple[int, ...]
    trials: int
    solvers: tuple[SolverSpec, ...]
    threshold: float = 1e-3
    master_seed: int = 0
    timing: bool = True

    def __post_init__(self) -> None:
        if self.family not in ("gaussian", "dct"):
            raise ValueError("family must be 'gaussian' or 'dct'")
        sp = tuple(int(s) for s in self.sparsities)
        if not sp or any(b <= a for a, b in zip(sp, sp[1:])):
            raise ValueError("sparsity grid must be nonempty and strictly "
                             "increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.solvers:
            raise ValueError("at least one solver spec is required")
        object.__setattr__(self, "sparsities", sp)
        object.__setattr__(self, "solvers", tuple(self.solvers))


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    sparsity: int
    solver_id: str
    rel_err: float
    success: bool
    wall_time_ms: float
    outer_iters: int

    def __post_init__(self) -> None:
        if self.rel_err < 0:
            raise ValueError("rel_err must be nonnegative")


@dataclass(frozen=True)
class CellStats:
    spec: SolverSpec
    sparsity: int
    trials: int
    successes: int
    mean_rel_err: float
    mean_time_ms: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    cells: list[CellStats]
    records: list[TrialRecord] = field(default_factory=list)


def _gen_matrix(plan: ExperimentPlan, seed: int):
    if plan.family == "gaussian":
        return gen_gaussian(plan.M, plan.N, plan.param, seed)
    return gen_dct(plan.M, plan.N, plan.param, seed)


def _dispatch(spec: SolverSpec, A, y, s: int):
    cfg = spec.config(s)
    if spec.method == "tlp":
        return irls_tlp(A, y, PenaltyParams(spec.a, spec.p), cfg)
    if spec.method == "lq":
        return irls_lq_baseline(A, y, spec.q, cfg)
    return irls_constrained(A, y, PenaltyParams(spec.a, spec.p), cfg)


def run_trial(plan: ExperimentPlan, spec: SolverSpec, sparsity: int,
              trial: int) -> TrialRecord:
    """One independent recovery attempt; never raises for solver failures."""
    mat_seed = derive_seed(plan.master_seed, spec.canonical_id, sparsity,
                           trial, 0)
    sig_seed = derive_seed(plan.master_seed, spec.canonical_id, sparsity,
                           trial, 1)
    A = _gen_matrix(plan, mat_seed)
    truth = gen_signal(plan.N, sparsity, sig_seed)
    y = A.entries @ truth.vector
    t0 = time.perf_counter()
    try:
        result = _dispatch(spec, A, y, sparsity)
        rel_err = float(np.linalg.norm(result.x - truth.vector)
                        / np.linalg.norm(truth.vector))
        outer = result.outer_iters
    except Exception:
        rel_err, outer = math.inf, 0
    elapsed_ms = (time.perf_counter() - t0) * 1e3 if plan.timing else 0.0
    if math.isnan(rel_err):
        rel_err = math.inf
    return TrialRecord(seed=mat_seed, sparsity=sparsity,
                       solver_id=spec.canonical_id, rel_err=rel_err,
                       success=rel_err < plan.threshold,
                       wall_time_ms=elapsed_ms, outer_iters=outer)


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def run_experiment(plan: ExperimentPlan,
                   workers: int | None = None) -> ExperimentResult:
    """Run every cell of the plan; schedule never affects the output.

    ``workers`` > 1 fans trials out to a thread pool (the heavy lifting is
    BLAS, which releases the GIL); defaults to the TLPSPARSE_WORKERS
    environment variable, or serial.
    """
    workers = _resolve_workers(workers)
    tasks = [(spec, sp, t)
             for spec in plan.solvers
             for sp in plan.sparsities
             for t in range(plan.trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda args: run_trial(plan, *args), tasks))
    else:
        records = [run_trial(plan, *args) for args in tasks]

    by_cell: dict[tuple[str, int], list[TrialRecord]] = {}
    for rec in records:
        by_cell.setdefault((rec.solver_id, rec.sparsity), []).append(rec)

    cells = []
    for spec in plan.solvers:
        for sp in plan.sparsities:
            recs = by_cell[(spec.canonical_id, sp)]
            cells.append(CellStats(
                spec=spec, sparsity=sp, trials=len(recs),
                successes=sum(r.success for r in recs),
                mean_rel_err=float(np.mean([r.rel_err for r in recs])),
                mean_time_ms=float(np.mean([r.wall_time_ms for r in recs]))))
    return ExperimentResult(plan=plan, cells=cells, records=records)


def _fmt(v: float) -> str:
    return repr(float(v))


def to_csv(result: ExperimentResult) -> str:
    """Pinned success-table format, one row per (solver, sparsity) cell."""
    plan = result.plan
    lines = [CSV_HEADER]
    for cell in result.cells:
        spec = cell.spec
        a = _fmt(spec.a) if spec.method != "lq" else ""
        p = _fmt(spec.p) if spec.method != "lq" else _fmt(spec.q)
        lines.append(",".join([
            spec.display, a, p, _fmt(spec.kappa),
            plan.family, str(plan.M), str(plan.N), _fmt(plan.param),
            str(cell.sparsity), str(cell.trials), str(cell.successes),
            _fmt(cell.success_rate), _fmt(cell.mean_rel_err),
            _fmt(cell.mean_time_ms)]))
    return "\n".join(lines) + "\n"


def parameter_sweep(a_grid, p_grid, sparsity: int, plan: ExperimentPlan,
                    workers: int | None = None) -> list[tuple[float, float, int, float]]:
    """Success rate over an (a, p) grid at one fixed sparsity.

    Each grid point runs exactly the trials that ``run_experiment`` would
    run for the same solver spec, so a degenerate 1 x 1 grid reproduces
    the corresponding cell of the success table.
    """
    a_grid = [float(a) for a in a_grid]
    p_grid = [float(p) for p in p_grid]
    if not a_grid or not p_grid:
        raise ValueError("grids must be nonempty")
    base = plan.solvers[0]
    rows = []
    for a in a_grid:
        for p in p_grid:
            spec = replace(base, method="tlp", a=a, p=p, label=None)
            cell_plan = replace(plan, sparsities=(sparsity,), solvers=(spec,))
            res = run_experiment(cell_plan, workers=workers)
            rows.append((a, p, sparsity, res.cells[0].success_rate))
    return rows


def sweep_to_csv(rows) -> str:
    lines = [SWEEP_CSV_HEADER]
    for a, p, sparsity, rate in rows:
        lines.append(f"{_fmt(a)},{_fmt(p)},{sparsity},{_fmt(rate)}")
    return "\n".join(lines) + "\n"
