"""Assembly and solution of the sampled Bellman-inequality LP.

Decision variable ``c`` (basis coefficients); the problem is

    maximise   z^T c
    subject to [A1; A2; -A2] c <= [b1; (1 - alpha)^-1 1; 1]

with one row ``beta(x_i) - alpha beta(proj(x_i+))`` per transition
(rhs ``dist(x_i+)``) and the two bound rows ``-1 <= beta(z_j)^T c <= 1/(1-alpha)``
per artificial point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import Basis, unisolvency_check
from .dynamics import TransitionDataset
from .errors import ConfigurationError, InputError
from .geometry import ConstraintSet, as_points
from .ipm import interior_point

BELLMAN, UPPER_BOUND, LOWER_BOUND = 0, 1, 2
_ROW_NAMES = {BELLMAN: "bellman", UPPER_BOUND: "upper_bound", LOWER_BOUND: "lower_bound"}

STATUSES = ("optimal", "infeasible", "unbounded", "numerical_failure")


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray
    row_kind: np.ndarray
    row_index: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m, N = self.A.shape
        if self.objective.shape != (N,) or self.b.shape != (m,):
            raise InputError("objective/rhs sizes do not match the constraint matrix")
        if self.row_kind.shape != (m,) or self.row_index.shape != (m,):
            raise InputError("row provenance must tag every row")
        for arr in (self.objective, self.A, self.b):
            if not np.all(np.isfinite(arr)):
                raise InputError("LP data must be finite")
            arr.setflags(write=False)

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def has_bound_rows(self) -> bool:
        return bool(np.any(self.row_kind != BELLMAN))

    def provenance(self, row: int) -> tuple[str, int]:
        return _ROW_NAMES[int(self.row_kind[row])], int(self.row_index[row])


@dataclass
class LpSolution:
    coefficients: np.ndarray
    status: str
    primal_objective: float
    max_constraint_violation: float
    duality_gap: float
    iterations: int = 0
    dual: np.ndarray | None = None
    message: str = ""
    solver: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def stats(self) -> dict:
        return {
            "status": self.status,
            "solver": self.solver,
            "iterations": self.iterations,
            "primal_objective": self.primal_objective,
            "max_constraint_violation": self.max_constraint_violation,
            "duality_gap": self.duality_gap,
            "message": self.message,
        }


def assemble_problem(dataset: TransitionDataset, artificial_points, basis: Basis, cset: ConstraintSet,
                     alpha: float, objective=None, quadrature: str = "auto",
                     mc_samples: int = 1_000_000, mc_seed=0) -> LpProblem:
    """Build the dense LP from transitions, artificial points and a basis.

    ``objective`` may be passed to reuse a previously integrated ``z``.
    """
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie in (0, 1)")
    if dataset.dim != cset.dim or basis.n != cset.dim:
        raise InputError("dataset, basis and constraint set dimensions differ")
    Z, _ = as_points(artificial_points, cset.dim)
    check = unisolvency_check(basis, Z)
    if not check["unisolvent"]:
        raise ConfigurationError(
            f"artificial points are not unisolvent for the basis (rank {check['rank']} < {basis.size})")

    K, Kp, N = len(dataset), Z.shape[0], basis.size
    A = np.empty((K + 2 * Kp, N))
    P, dist = cset.project_and_distance(dataset.Xp)
    step = max(1, 2_000_000 // N)
    for s in range(0, K, step):
        e = min(s + step, K)
        A[s:e] = basis.eval(dataset.X[s:e]) - alpha * basis.eval(P[s:e])
    B2 = basis.eval(Z)
    A[K:K + Kp] = B2
    A[K + Kp:] = -B2
    b = np.concatenate((dist, np.full(Kp, 1.0 / (1.0 - alpha)), np.ones(Kp)))

    info = {"unisolvency": check}
    if objective is None:
        objective, qinfo = basis.integrate(cset, quadrature, mc_samples, mc_seed)
        info["integration"] = qinfo
    objective = np.array(objective, dtype=float)

    kind = np.concatenate((np.full(K, BELLMAN), np.full(Kp, UPPER_BOUND), np.full(Kp, LOWER_BOUND))).astype(np.int8)
    index = np.concatenate((np.arange(K), np.arange(Kp), np.arange(Kp)))
    return LpProblem(objective, A, b, kind, index, info)


def check_solution(problem: LpProblem, c) -> tuple[float, float]:
    """Independent feasibility check: max violation of ``A c <= b`` and the scaled tolerance unit."""
    viol = float(np.max(problem.A @ np.asarray(c, dtype=float) - problem.b, initial=-np.inf))
    return max(viol, 0.0), 1.0 + float(np.max(np.abs(problem.b), initial=0.0))


def builtin_solver(problem: LpProblem, feasibility_tol: float = 1e-8, gap_tol: float = 1e-8,
                   **options) -> LpSolution:
    """Default solver: the dense interior-point method of :mod:`invlp.ipm`."""
    res = interior_point(problem.A, problem.b, problem.objective, feasibility_tol=feasibility_tol,
                         gap_tol=gap_tol, **options)
    c, y = res["c"], res["y"]
    viol, unit = check_solution(problem, c)
    pobj = float(problem.objective @ c)
    gap = abs(float(problem.b @ y) - pobj) / (1.0 + abs(pobj))
    status, message = res["status"], res["message"]
    if status == "optimal" and viol > feasibility_tol * unit:
        status = "numerical_failure"
        message = f"converged in scaled variables but violation {viol:.3e} exceeds tolerance"
    return LpSolution(c, status, pobj, viol, gap, res["iterations"], y, message, "builtin")


def scipy_highs_solver(problem: LpProblem, feasibility_tol: float = 1e-8, gap_tol: float = 1e-8,
                       **options) -> LpSolution:
    """Adapter around ``scipy.optimize.linprog`` (HiGHS); not registered by default."""
    from scipy.optimize import linprog

    res = linprog(-problem.objective, A_ub=problem.A, b_ub=problem.b, bounds=(None, None),
                  method="highs", options={"primal_feasibility_tolerance": max(feasibility_tol, 1e-10),
                                           "dual_feasibility_tolerance": max(feasibility_tol, 1e-10)})
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, "numerical_failure")
    c = res.x if res.x is not None else np.zeros(problem.num_vars)
    viol, _ = check_solution(problem, c)
    y = -res.ineqlin.marginals if status == "optimal" else None
    pobj = float(problem.objective @ c)
    gap = abs(float(problem.b @ y) - pobj) / (1.0 + abs(pobj)) if y is not None else float("nan")
    return LpSolution(c, status, pobj, viol, gap, int(getattr(res, "nit", 0)), y, res.message, "scipy_highs")


SolverFn = Callable[..., LpSolution]
_REGISTRY: dict[str, SolverFn] = {"builtin": builtin_solver}


def register_solver(name: str, fn: SolverFn) -> None:
    """Make ``fn`` available under ``name``; it must honour the ``solve_lp`` contract."""
    _REGISTRY[name] = fn


def unregister_solver(name: str) -> None:
    if name == "builtin":
        raise ConfigurationError("the built-in solver cannot be removed")
    _REGISTRY.pop(name, None)


def available_solvers() -> list[str]:
    return sorted(_REGISTRY)


def get_solver(name: str) -> SolverFn:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown LP solver {name!r}; available: {available_solvers()}") from None


def solve_lp(problem: LpProblem, feasibility_tol: float = 1e-8, gap_tol: float = 1e-8,
             solver: str = "builtin", **options) -> LpSolution:
    """Maximise ``z^T c`` subject to ``A c <= b``."""
    return get_solver(solver)(problem, feasibility_tol=feasibility_tol, gap_tol=gap_tol, **options)


def write_problem_dump(problem: LpProblem, path) -> None:
    """Plain-text dump: ``N rows``, then ``z``, then one ``a_1 ... a_N | b`` line per row."""
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    with open(path, "w") as fh:
        fh.write(f"{problem.num_vars} {problem.num_rows}\n")
        fh.write(" ".join(fmt(v) for v in problem.objective) + "\n")
        for row, rhs in zip(problem.A, problem.b):
            fh.write(" ".join(fmt(v) for v in row) + " | " + fmt(rhs) + "\n")


def read_problem_dump(path) -> LpProblem:
    with open(path) as fh:
        N, m = (int(t) for t in fh.readline().split())
        z = np.array(fh.readline().split(), dtype=float)
        A = np.empty((m, N))
        b = np.empty(m)
        for i in range(m):
            lhs, rhs = fh.readline().split("|")
            A[i] = np.array(lhs.split(), dtype=float)
            b[i] = float(rhs)
    return LpProblem(z, A, b, np.zeros(m, dtype=np.int8), np.arange(m))
