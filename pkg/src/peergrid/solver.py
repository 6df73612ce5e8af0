"""Interior-point conic solve of a :class:`ConicProblem` via cvxpy.

The adapter is the only module that touches a concrete solver. Contract:

* minimize a linear objective over linear equalities/inequalities, box
  bounds, and second-order cones;
* return primal values for every variable and duals for every labeled row,
  with the sign convention ``dual = d(objective)/d(rhs)`` — for a nodal
  active-power balance row whose rhs is the nodal load, the dual is the
  marginal cost of one extra pu of load there.

Any solver meeting that contract can be swapped in; Clarabel is the default
and ECOS-style alternatives can be named via ``solver=``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from .conic import ConicProblem

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_NUMERICAL = "numerical-failure"

_STATUS_MAP = {
    cp.OPTIMAL: STATUS_OPTIMAL,
    cp.INFEASIBLE: STATUS_INFEASIBLE,
    cp.UNBOUNDED: STATUS_UNBOUNDED,
}


class SolverFailure(RuntimeError):
    """Raised when the backend raises instead of reporting a status."""


@dataclass
class SolverStats:
    solver: str
    iterations: int | None = None
    solve_time: float | None = None
    duality_gap: float | None = None


@dataclass
class Solution:
    status: str
    objective_value: float | None
    values: dict = field(default_factory=dict)        # VarKey -> float
    eq_duals: dict = field(default_factory=dict)      # RowLabel -> float
    stats: SolverStats | None = None
    infeasibility_hint: list[str] = field(default_factory=list)

    def value(self, key) -> float:
        return self.values[key]

    def eq_dual(self, label) -> float:
        return self.eq_duals[label]


def _stack_rows(rows, n):
    data, ri, ci, rhs = [], [], [], []
    for k, row in enumerate(rows):
        for idx, coeff in row.coeffs:
            ri.append(k)
            ci.append(idx)
            data.append(coeff)
        rhs.append(row.rhs)
    mat = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
    return mat, np.array(rhs)


def _affine_matrix(entries, n):
    data, ri, ci, const = [], [], [], []
    for k, e in enumerate(entries):
        for idx, coeff in e.coeffs:
            ri.append(k)
            ci.append(idx)
            data.append(coeff)
        const.append(e.const)
    mat = sp.csr_matrix((data, (ri, ci)), shape=(len(entries), n))
    return mat, np.array(const)


def solve(problem: ConicProblem, tol: float = 1e-9, solver: str = "CLARABEL") -> Solution:
    """Solve and extract primal values plus duals for labeled equality rows.

    A numerically stalled solve is retried once at a 10x looser tolerance;
    the retry path is deterministic for identical inputs.
    """
    solution = _solve_once(problem, tol, solver)
    if solution.status == STATUS_NUMERICAL:
        solution = _solve_once(problem, 10 * tol, solver)
    return solution


def _solve_once(problem: ConicProblem, tol: float, solver: str) -> Solution:
    n = problem.n_vars
    x = cp.Variable(n)

    constraints = []
    eq_con = None
    if problem.equalities:
        a_eq, b_eq = _stack_rows(problem.equalities, n)
        eq_con = a_eq @ x == b_eq
        constraints.append(eq_con)
    ineq_con = None
    if problem.inequalities:
        g, h = _stack_rows(problem.inequalities, n)
        ineq_con = g @ x <= h
        constraints.append(ineq_con)

    lb, ub = problem.lb, problem.ub
    fixed = np.isfinite(lb) & (lb == ub)
    lo = np.isfinite(lb) & ~fixed
    hi = np.isfinite(ub) & ~fixed
    if fixed.any():
        constraints.append(x[fixed] == lb[fixed])
    if lo.any():
        constraints.append(x[lo] >= lb[lo])
    if hi.any():
        constraints.append(x[hi] <= ub[hi])

    for cone in problem.cones:
        f, g0 = _affine_matrix(cone.entries, n)
        expr = f @ x + g0
        constraints.append(cp.SOC(expr[0], expr[1:]))

    c = np.zeros(n)
    for idx, coeff in problem.objective.items():
        c[idx] = coeff
    prob = cp.Problem(cp.Minimize(c @ x + problem.obj_const), constraints)

    kwargs = _solver_options(solver, tol)
    try:
        prob.solve(solver=solver, **kwargs)
    except cp.error.SolverError as exc:
        raise SolverFailure(f"{solver} failed: {exc}") from exc

    status = _STATUS_MAP.get(prob.status, STATUS_NUMERICAL)
    stats = SolverStats(solver=solver)
    if prob.solver_stats is not None:
        stats.iterations = prob.solver_stats.num_iters
        stats.solve_time = prob.solver_stats.solve_time

    if status != STATUS_OPTIMAL:
        return Solution(status=status, objective_value=None, stats=stats)

    # primal - dual objective equals the summed complementarity residuals
    # for a feasible primal/dual pair, so use that as the reported gap
    gap_abs = 0.0
    for con in constraints:
        dv = con.dual_value
        if dv is None:
            continue
        if isinstance(con, cp.constraints.SOC):
            resid = np.concatenate(
                [np.atleast_1d(con.args[0].value).ravel(), np.ravel(con.args[1].value)]
            )
            if isinstance(dv, (list, tuple)):
                dv = np.concatenate([np.atleast_1d(d).ravel() for d in dv])
            gap_abs += abs(float(np.dot(np.ravel(dv), resid)))
        else:
            lhs = con.args[0].value - con.args[1].value
            gap_abs += abs(float(np.dot(np.ravel(dv), np.ravel(lhs))))
    stats.duality_gap = gap_abs / max(1.0, abs(float(prob.value)))

    values = {key: float(x.value[i]) for i, key in enumerate(problem.var_keys)}
    eq_duals = {}
    if eq_con is not None and eq_con.dual_value is not None:
        raw = np.asarray(eq_con.dual_value).ravel()
        # cvxpy reports y with L = f + y^T (Ax - b); d(obj)/d(rhs) = -y
        for label, row_idx in problem.eq_label_index.items():
            eq_duals[label] = float(-raw[row_idx])

    return Solution(
        status=status,
        objective_value=float(prob.value),
        values=values,
        eq_duals=eq_duals,
        stats=stats,
    )


def _solver_options(solver: str, tol: float) -> dict:
    if solver == "CLARABEL":
        # gap tolerance an order looser than feasibility: chasing a 1e-9
        # relative gap stalls on badly scaled corners (VOLL terms)
        return {
            "tol_gap_abs": 10 * tol,
            "tol_gap_rel": 10 * tol,
            "tol_feas": tol,
            "max_iter": 200,
        }
    if solver == "ECOS":
        return {"abstol": 10 * tol, "reltol": 10 * tol, "feastol": tol}
    if solver == "SCS":
        return {"eps": max(tol, 1e-9)}
    return {}
