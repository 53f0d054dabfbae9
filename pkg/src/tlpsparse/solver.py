"""Double-loop solvers for transformed-lp regularized recovery.

The unconstrained solver minimizes

    Q(x) = lam * P(x) + 1/2 ||A x - y||^2

by an outer reweighting loop and an inner difference-of-convex loop:

* outer: freeze weights w_i = (x_i^2 + eps^kappa)^((p-2)/2), shrink the
  smoothing parameter eps in step with the (s+1)-th largest magnitude of
  the iterate, and stop when that tail magnitude stagnates or vanishes;
* inner: the weighted subproblem  lam (a+1) sum_i w_i x_i^2/(a+|x_i|^p)
  + 1/2 ||A x - y||^2  is convex but has no closed-form minimizer, so it
  is split as g - h with both parts strongly convex (modulus >= 2c) and
  solved by linearizing h; each step is one SPD linear solve, and the
  subproblem objective f_w is guaranteed nonincreasing along the way.

A constrained variant (min P(x) s.t. Ax = y) performs classical
reweighted least squares on a surrogate functional, and an IRLS-lq
baseline with the same outer schedule is provided for benchmark
comparisons.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError, null_space
from scipy.optimize import minimize

from .penalty import PenaltyParams, penalty_tlp, penalty_lp
from .sensing import SensingMatrix


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by all solver variants.

    ``s`` is the sparsity the eps schedule targets (the tail magnitude
    r(x)_{s+1} drives both the eps update and the stopping tests).  ``c``
    is the strong-convexity constant added to both halves of the DC split;
    it must stay well below lam * (a+1)/a * w for typical weights or the
    inner iteration contracts too slowly to be useful.
    """

    s: int
    lam: float = 1e-6
    kappa: float = 3.0
    delta_scale: float = 2.0
    c: float = 1e-6
    eps0: float = 1.0
    inner_tol: float = 1e-8
    inner_max: int = 20
    outer_tol_step: float = 1e-8
    outer_tol_mag: float = 1e-8
    outer_max: int = 2000

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("target sparsity s must be >= 1")
        for name in ("lam", "kappa", "delta_scale", "c", "eps0",
                     "inner_tol", "outer_tol_step", "outer_tol_mag"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.inner_max < 1 or self.outer_max < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass(frozen=True)
class WeightState:
    """Weights and smoothing level at one outer iterate."""

    w: np.ndarray
    omega: np.ndarray
    eps: float

    @classmethod
    def from_iterate(cls, params: PenaltyParams, x: np.ndarray, eps: float,
                     kappa: float) -> "WeightState":
        epspow = eps ** kappa
        w = (x * x + epspow) ** ((params.p - 2.0) / 2.0)
        omega = w * (params.a + np.abs(x) ** params.p) ** (2.0 / params.p - 1.0)
        return cls(w=w, omega=omega, eps=eps)


@dataclass
class SolveResult:
    """Outcome of one solver run, with enough traces to audit it.

    ``objective_trace`` holds the solver's own objective per outer
    iteration (Q for the regularized solvers, the penalty value for the
    constrained one); ``j_trace`` is only filled by the constrained
    solver and holds the surrogate functional at matched weights.
    ``converged`` is one of ``sparsity_reached``, ``step_converged``,
    ``max_iters``.
    """

    solver: str
    x: np.ndarray
    outer_iters: int
    total_inner_iters: int
    final_eps: float
    converged: str
    residual: float
    objective_trace: list[float] = field(default_factory=list)
    j_trace: list[float] | None = None
    eps_trace: list[float] = field(default_factory=list)
    w_inf_trace: list[float] = field(default_factory=list)
    inner_f_traces: list[list[float]] | None = None
    final_grad_inf: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x"] = [float(v) for v in self.x]
        return d


@dataclass
class DcaResult:
    """Inner-loop outcome: last iterate plus the recorded f_w values."""

    x: np.ndarray
    f_trace: np.ndarray
    iters: int
    converged: bool


def _as_array(A) -> np.ndarray:
    return A.entries if isinstance(A, SensingMatrix) else np.asarray(A, float)


def rearrange(x) -> tuple[np.ndarray, np.ndarray]:
    """Magnitudes sorted descending plus tail sums.

    Ties break by ascending original index.  ``sigma_tail[j]`` is the sum
    of all magnitudes strictly below rank j, i.e. sum(r[j:]) at j = 0 is
    the full l1 mass and sigma_tail[N-1] is the smallest magnitude.
    """
    x = np.asarray(x, dtype=float)
    order = np.argsort(-np.abs(x), kind="stable")
    r = np.abs(x)[order]
    sigma_tail = np.cumsum(r[::-1])[::-1]
    return r, sigma_tail


def tail_magnitude(x, s: int) -> float:
    """The (s+1)-th largest magnitude of x — distance from s-sparsity."""
    r = np.sort(np.abs(np.asarray(x, dtype=float)))
    return float(r[-(s + 1)])


def grad_phi_w(params: PenaltyParams, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient of phi_w(x) = sum_i w_i |x_i|^(p+2) / (a (a + |x_i|^p)).

    Componentwise  w sign(x) |x|^(p+1) [(p+2) a + 2 |x|^p] / (a (a+|x|^p)^2),
    which is exactly 0 at x_i = 0 since p + 1 > 1.
    """
    a, p = params.a, params.p
    ax = np.abs(x)
    axp = ax ** p
    return w * np.sign(x) * ax ** (p + 1) * ((p + 2.0) * a + 2.0 * axp) \
        / (a * (a + axp) ** 2)


def phi_w(params: PenaltyParams, w: np.ndarray, x: np.ndarray) -> float:
    a, p = params.a, params.p
    ax = np.abs(x)
    return float(np.sum(w * ax ** (p + 2) / (a * (a + ax ** p))))


def f_w_value(A, y, params: PenaltyParams, lam: float, w: np.ndarray,
              x: np.ndarray) -> float:
    """Weighted subproblem objective lam(a+1) sum w x^2/(a+|x|^p) + 1/2 res^2."""
    A = _as_array(A)
    res = A @ x - y
    pen = np.sum(w * x * x / (params.a + np.abs(x) ** params.p))
    return float(lam * (params.a + 1.0) * pen + 0.5 * (res @ res))


def grad_f_w(A, y, params: PenaltyParams, lam: float, w: np.ndarray,
             x: np.ndarray) -> np.ndarray:
    """Gradient of the weighted subproblem objective.

    Assembled from the DC split: (2 lam (a+1)/a) W x - lam (a+1) grad_phi_w
    plus the least-squares part.
    """
    A = _as_array(A)
    a = params.a
    lin = A.T @ (A @ x - y)
    return (2.0 * lam * (a + 1.0) / a) * w * x \
        - lam * (a + 1.0) * grad_phi_w(params, w, x) + lin


class _SpdSolver:
    """Solves (A^T A + diag(d)) x = rhs, directly or via the m x m dual.

    The dual route (matrix-inversion identity) factors
    I + A diag(1/d) A^T instead of the full N x N system and is used when
    M < N/4; both routes agree to solver precision.  ``gram`` lets outer
    loops reuse a precomputed A^T A across refactorizations.
    """

    def __init__(self, A: np.ndarray, d: np.ndarray, method: str = "auto",
                 gram: np.ndarray | None = None):
        M, N = A.shape
        if method == "auto":
            method = "woodbury" if 4 * M < N else "direct"
        self.method = method
        self._A = A
        if method == "direct":
            B = (A.T @ A) if gram is None else gram.copy()
            B[np.diag_indices_from(B)] += d
            self._factor = cho_factor(B, check_finite=False)
        elif method == "woodbury":
            self._dinv = 1.0 / d
            G = (A * self._dinv) @ A.T
            G[np.diag_indices_from(G)] += 1.0
            self._factor = cho_factor(G, check_finite=False)
        else:
            raise ValueError(f"unknown solve method {method!r}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.method == "direct":
            return cho_solve(self._factor, rhs, check_finite=False)
        u = self._dinv * rhs
        return u - self._dinv * (self._A.T @ cho_solve(
            self._factor, self._A @ u, check_finite=False))


def dca_subproblem(A, y, params: PenaltyParams, w: np.ndarray,
                   cfg: SolverConfig, x_init: np.ndarray | None = None,
                   solve_method: str = "auto",
                   gram: np.ndarray | None = None) -> DcaResult:
    """Difference-of-convex iteration for the weighted subproblem.

    Each step linearizes the concave part at the current iterate and
    solves one SPD system

        [A^T A + 2 c I + (2 lam (a+1)/a) W] x = A^T y + v,
        v = lam (a+1) grad_phi_w(x) + 2 c x.

    Stops when the sup-norm step falls below inner_tol relative to the
    iterate scale, or at inner_max.  The recorded f_w values are
    nonincreasing (both split halves are strongly convex with modulus
    >= 2c).
    """
    A = _as_array(A)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    a = params.a
    lam, c = cfg.lam, cfg.c
    coef = 2.0 * lam * (a + 1.0) / a
    solver = _SpdSolver(A, 2.0 * c + coef * w, method=solve_method,
                        gram=gram)
    Aty = A.T @ y
    x = np.zeros(A.shape[1]) if x_init is None else np.array(x_init, dtype=float)
    trace = [f_w_value(A, y, params, lam, w, x)]
    iters = 0
    converged = False
    for _ in range(cfg.inner_max):
        v = lam * (a + 1.0) * grad_phi_w(params, w, x) + 2.0 * c * x
        x_new = solver.solve(Aty + v)
        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        iters += 1
        trace.append(f_w_value(A, y, params, lam, w, x))
        if step < cfg.inner_tol * max(float(np.max(np.abs(x))), 1.0):
            converged = True
            break
    return DcaResult(x=x, f_trace=np.asarray(trace), iters=iters,
                     converged=converged)


def _check_problem(A: np.ndarray, y: np.ndarray, cfg: SolverConfig) -> None:
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    if y.ndim != 1 or y.size != A.shape[0]:
        raise ValueError(f"y has length {y.size}, expected {A.shape[0]}")
    if cfg.s >= A.shape[1]:
        raise ValueError(f"target sparsity s={cfg.s} must be below N={A.shape[1]}")


def irls_tlp(A, y, params: PenaltyParams, cfg: SolverConfig) -> SolveResult:
    """Outer reweighting loop around the DC inner solver.

    Starts from zero with eps = eps0; after each inner solve the smoothing
    parameter is pulled down to (tail magnitude)/delta_scale, which both
    caps the weights (||w||_inf <= eps^(-kappa(2-p)/2)) and anneals the
    surrogate toward the true penalty.  Stops when the tail magnitude
    drops below outer_tol_mag (sparsity reached), when it stagnates, or
    at outer_max; if eps reaches exactly zero the iterate is frozen.
    """
    A = _as_array(A)
    y = np.asarray(y, dtype=float)
    _check_problem(A, y, cfg)
    M, N = A.shape
    p = params.p
    gram = A.T @ A if 4 * M >= N else None

    x = np.zeros(N)
    eps = cfg.eps0
    tail_old = 0.0
    status = "max_iters"
    outer = 0
    total_inner = 0
    obj_trace: list[float] = []
    eps_trace: list[float] = []
    w_inf_trace: list[float] = []
    inner_traces: list[list[float]] = []
    w = np.ones(N)

    for _ in range(cfg.outer_max):
        epspow = eps ** cfg.kappa
        if eps == 0.0 or epspow == 0.0:
            status = "sparsity_reached"
            break
        eps_trace.append(eps)
        w = (x * x + epspow) ** ((p - 2.0) / 2.0)
        w_inf_trace.append(float(np.max(w)))
        inner = dca_subproblem(A, y, params, w, cfg, gram=gram)
        x = inner.x
        total_inner += inner.iters
        inner_traces.append([float(v) for v in inner.f_trace])
        outer += 1

        tail = tail_magnitude(x, cfg.s)
        eps = min(eps, tail / cfg.delta_scale)
        res = A @ x - y
        obj_trace.append(float(cfg.lam * penalty_tlp(params, x)
                               + 0.5 * (res @ res)))
        if tail < cfg.outer_tol_mag:
            status = "sparsity_reached"
            break
        if abs(tail - tail_old) < cfg.outer_tol_step * max(tail_old, 1.0):
            status = "step_converged"
            break
        tail_old = tail

    grad_inf = float(np.max(np.abs(
        grad_f_w(A, y, params, cfg.lam, w, x)))) if outer else 0.0
    return SolveResult(
        solver=f"tlp(a={params.a:g},p={params.p:g})",
        x=x, outer_iters=outer, total_inner_iters=total_inner,
        final_eps=eps, converged=status,
        residual=float(np.linalg.norm(A @ x - y)),
        objective_trace=obj_trace, eps_trace=eps_trace,
        w_inf_trace=w_inf_trace, inner_f_traces=inner_traces,
        final_grad_inf=grad_inf)


def j_closed_form(params: PenaltyParams, x: np.ndarray, eps: float,
                  kappa: float) -> float:
    """Surrogate functional at matched weights:
    (a+1) sum (x_i^2 + eps^kappa)^(p/2) / (a + |x_i|^p)."""
    a, p = params.a, params.p
    return float((a + 1.0) * np.sum(
        (x * x + eps ** kappa) ** (p / 2.0) / (a + np.abs(x) ** p)))


def j_functional(params: PenaltyParams, x: np.ndarray, omega: np.ndarray,
                 eps: float, kappa: float) -> float:
    """Full surrogate functional at arbitrary positive weights omega."""
    a, p = params.a, params.p
    num = (x * x + eps ** kappa) / (a + np.abs(x) ** p) ** (2.0 / p)
    return float(0.5 * p * (a + 1.0) * np.sum(
        num * omega + (2.0 - p) / p * omega ** (-p / (2.0 - p))))


def _constrained_ls(A: np.ndarray, y: np.ndarray, dvec: np.ndarray) -> np.ndarray:
    # min sum x_i^2 / dvec_i  s.t.  Ax = y, via x = D A^T (A D A^T)^{-1} y
    ADAt = (A * dvec) @ A.T
    try:
        factor = cho_factor(ADAt)
    except LinAlgError:
        warnings.warn("A D A^T is rank deficient; adding a tiny ridge",
                      RuntimeWarning, stacklevel=2)
        ridge = 1e-12 * float(np.trace(ADAt))
        ADAt[np.diag_indices_from(ADAt)] += ridge
        factor = cho_factor(ADAt)
    return dvec * (A.T @ cho_solve(factor, y))


def _feasible_minimizer(A: np.ndarray, y: np.ndarray, params: PenaltyParams,
                        omega: np.ndarray, eps: float, kappa: float,
                        candidates: list[np.ndarray]) -> np.ndarray:
    # local minimization of the surrogate over {Ax = y}: parameterize the
    # feasible set by the null space, polish each candidate, keep the best
    a, p = params.a, params.p
    epspow = eps ** kappa
    Z = null_space(A)
    x_part, *_ = np.linalg.lstsq(A, y, rcond=None)
    if Z.shape[1] == 0:
        return x_part

    def value_grad(t: np.ndarray):
        xv = x_part + Z @ t
        ax = np.abs(xv)
        axp = ax ** p
        denom = (a + axp) ** (2.0 / p)
        u = xv * xv + epspow
        val = 0.5 * p * (a + 1.0) * float(np.sum(u / denom * omega))
        # d/dx of u/denom; the |x|^(p-1) factor is taken as 0 at x = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            axpm1 = np.where(ax > 0, ax ** (p - 1.0), 0.0)
        gx = 2.0 * xv / denom - 2.0 * u * axpm1 * np.sign(xv) / (
            (a + axp) * denom)
        gx *= 0.5 * p * (a + 1.0) * omega
        return val, Z.T @ gx

    best_x, best_val = None, np.inf
    for cand in candidates:
        t0 = Z.T @ (cand - x_part)
        out = minimize(value_grad, t0, jac=True, method="L-BFGS-B",
                       options={"maxiter": 200})
        for t in (out.x, t0):
            val = value_grad(t)[0]
            if val < best_val:
                best_val = val
                best_x = x_part + Z @ t
    return best_x


def irls_constrained(A, y, params: PenaltyParams, cfg: SolverConfig,
                     exact_update: bool = False) -> SolveResult:
    """Reweighted least squares for  min P(x)  s.t.  Ax = y.

    The default x-update freezes all weight denominators at the previous
    iterate and solves the resulting weighted least squares in closed
    form.  ``exact_update=True`` instead locally minimizes the surrogate
    functional over {Ax = y} (null-space parameterization, warm-started
    at the previous iterate and at the frozen-weight candidate, best kept),
    which guarantees the recorded surrogate values never increase.

    ``objective_trace`` records the penalty value per outer iterate and
    ``j_trace`` the matched surrogate value; both include the final point.
    """
    A = _as_array(A)
    y = np.asarray(y, dtype=float)
    _check_problem(A, y, cfg)
    N = A.shape[1]
    a, p = params.a, params.p

    x = np.zeros(N)
    eps = cfg.eps0
    status = "max_iters"
    outer = 0
    j_trace: list[float] = []
    pen_trace: list[float] = []
    eps_trace: list[float] = []

    for _ in range(cfg.outer_max):
        epspow = eps ** cfg.kappa
        if eps == 0.0 or epspow == 0.0:
            status = "sparsity_reached"
            break
        j_trace.append(j_closed_form(params, x, eps, cfg.kappa))
        pen_trace.append(penalty_tlp(params, x))
        eps_trace.append(eps)

        w = (x * x + epspow) ** ((p - 2.0) / 2.0)
        if exact_update:
            omega = w * (a + np.abs(x) ** p) ** (2.0 / p - 1.0)
            frozen = _constrained_ls(
                A, y, (a + np.abs(x) ** p) / ((a + 1.0) * w))
            cands = [frozen] if outer == 0 else [frozen, x]
            x_new = _feasible_minimizer(A, y, params, omega, eps, cfg.kappa,
                                        cands)
        else:
            # hat-w = (a+1) w / (a + |x|^p), frozen at the current iterate
            x_new = _constrained_ls(
                A, y, (a + np.abs(x) ** p) / ((a + 1.0) * w))

        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        outer += 1
        tail = tail_magnitude(x, cfg.s)
        eps = min(eps, tail / cfg.delta_scale)
        if step < cfg.outer_tol_step:
            status = "step_converged"
            break
        if tail < cfg.outer_tol_mag:
            status = "sparsity_reached"
            break

    j_trace.append(j_closed_form(params, x, eps, cfg.kappa))
    pen_trace.append(penalty_tlp(params, x))
    eps_trace.append(eps)
    return SolveResult(
        solver=f"constrained(a={a:g},p={p:g})",
        x=x, outer_iters=outer, total_inner_iters=0,
        final_eps=eps, converged=status,
        residual=float(np.linalg.norm(A @ x - y)),
        objective_trace=pen_trace, j_trace=j_trace, eps_trace=eps_trace)


def irls_lq_baseline(A, y, q: float, cfg: SolverConfig) -> SolveResult:
    """IRLS for  lam ||x||_q^q + 1/2 ||Ax - y||^2  with the same schedule.

    One ridge-regularized normal-equation solve per outer iteration with
    weights (x_i^2 + eps^kappa)^((q-2)/2); eps update and stopping match
    the transformed-lp solver, which makes success-rate comparisons
    schedule-for-schedule fair.
    """
    if not (0 < q <= 1):
        raise ValueError("q must lie in (0, 1]")
    A = _as_array(A)
    y = np.asarray(y, dtype=float)
    _check_problem(A, y, cfg)
    N = A.shape[1]

    x = np.zeros(N)
    eps = cfg.eps0
    tail_old = 0.0
    status = "max_iters"
    outer = 0
    obj_trace: list[float] = []
    eps_trace: list[float] = []
    w_inf_trace: list[float] = []
    Aty = A.T @ y
    gram = A.T @ A if 4 * A.shape[0] >= N else None

    for _ in range(cfg.outer_max):
        epspow = eps ** cfg.kappa
        if eps == 0.0 or epspow == 0.0:
            status = "sparsity_reached"
            break
        eps_trace.append(eps)
        w = (x * x + epspow) ** ((q - 2.0) / 2.0)
        w_inf_trace.append(float(np.max(w)))
        x = _SpdSolver(A, 2.0 * cfg.lam * w, gram=gram).solve(Aty)
        outer += 1

        tail = tail_magnitude(x, cfg.s)
        eps = min(eps, tail / cfg.delta_scale)
        res = A @ x - y
        obj_trace.append(float(cfg.lam * penalty_lp(q, x) + 0.5 * (res @ res)))
        if tail < cfg.outer_tol_mag:
            status = "sparsity_reached"
            break
        if abs(tail - tail_old) < cfg.outer_tol_step * max(tail_old, 1.0):
            status = "step_converged"
            break
        tail_old = tail

    return SolveResult(
        solver=f"lq(q={q:g})",
        x=x, outer_iters=outer, total_inner_iters=outer,
        final_eps=eps, converged=status,
        residual=float(np.linalg.norm(A @ x - y)),
        objective_trace=obj_trace, eps_trace=eps_trace,
        w_inf_trace=w_inf_trace)
