"""Solver-agnostic LMI feasibility problems.

A problem is a set of matrix inequalities, each affine in named decision
variables (symmetric matrices, general matrices, scalars), plus linear
constraints on the scalars.  Solving delegates to an external conic solver
(Clarabel, CVXOPT, SCS in that order), but solver output is never trusted:
a solution counts as feasible only after substituting the values back into
every constraint and checking extreme eigenvalues directly.

Strict inequalities F(x) < 0 are realized as F(x) <= -eps*I with the margin
recorded on the constraint.  When the margin-strict problem is numerically
out of reach (near-marginal plants leave only a sliver of slack) a second
pass maximizes a shared slack variable, which lands interior points the
plain feasibility form misses.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

import cvxpy as cp

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
INACCURATE = "inaccurate"

# Residual allowance on top of the declared strictness margin when
# re-checking solutions by eigenvalue computation.
RECHECK_TOL = 1e-7

# Smallest slack accepted from the slack-maximization pass.
SLACK_FLOOR = 1e-9


def default_strictness(dim: int) -> float:
    """Scale-aware default margin for strict inequalities of a given dimension."""
    return 1e-7 * dim


@dataclass(frozen=True)
class SymmetricVar:
    name: str
    dim: int

    @property
    def scalar_count(self) -> int:
        return self.dim * (self.dim + 1) // 2


@dataclass(frozen=True)
class GeneralVar:
    name: str
    rows: int
    cols: int

    @property
    def scalar_count(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class ScalarVar:
    name: str

    scalar_count = 1


class AffineExpr:
    """Matrix-valued expression affine in the declared variables.

    Stored as a constant plus sandwich terms L @ V @ R (V a matrix variable,
    optionally transposed) plus scalar terms x * F.
    """

    def __init__(self, shape, const=None, sandwich=None, scaled=None):
        self.shape = tuple(shape)
        self.const = np.zeros(self.shape) if const is None else np.asarray(const, dtype=float)
        self.sandwich = list(sandwich or [])  # (L, var_name, R, transpose_var)
        self.scaled = list(scaled or [])      # (var_name, F)

    @staticmethod
    def constant(M) -> "AffineExpr":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return AffineExpr(M.shape, const=M)

    @staticmethod
    def zeros(rows, cols) -> "AffineExpr":
        return AffineExpr((rows, cols))

    @staticmethod
    def term(L, var, R, transpose=False) -> "AffineExpr":
        """L @ V @ R (or L @ V.T @ R) for a matrix variable V."""
        L = np.atleast_2d(np.asarray(L, dtype=float))
        R = np.atleast_2d(np.asarray(R, dtype=float))
        return AffineExpr((L.shape[0], R.shape[1]),
                          sandwich=[(L, var.name, R, transpose)])

    @staticmethod
    def scalar_term(var, F) -> "AffineExpr":
        F = np.atleast_2d(np.asarray(F, dtype=float))
        return AffineExpr(F.shape, scaled=[(var.name, F)])

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return AffineExpr(self.shape, self.const + other.const,
                          self.sandwich + other.sandwich, self.scaled + other.scaled)

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(self.shape, -self.const,
                          [(-L, v, R, t) for (L, v, R, t) in self.sandwich],
                          [(v, -F) for (v, F) in self.scaled])

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + (-other)

    @property
    def T(self) -> "AffineExpr":
        return AffineExpr((self.shape[1], self.shape[0]), self.const.T,
                          [(R.T, v, L.T, not t) for (L, v, R, t) in self.sandwich],
                          [(v, F.T) for (v, F) in self.scaled])

    def value(self, env: dict) -> np.ndarray:
        """Numeric value under an assignment of variable values."""
        out = self.const.copy()
        for L, name, R, t in self.sandwich:
            V = np.atleast_2d(np.asarray(env[name], dtype=float))
            out += L @ (V.T if t else V) @ R
        for name, F in self.scaled:
            out += float(env[name]) * F
        return out

    def to_cvxpy(self, vmap: dict):
        out = cp.Constant(self.const)
        for L, name, R, t in self.sandwich:
            V = vmap[name]
            out = out + L @ (V.T if t else V) @ R
        for name, F in self.scaled:
            out = out + vmap[name] * F
        return out

    def symmetrized(self) -> "AffineExpr":
        """(E + E.T)/2 for a square expression; exact for symmetric data."""
        half = AffineExpr(self.shape, 0.5 * self.const,
                          [(0.5 * L, v, R, t) for (L, v, R, t) in self.sandwich],
                          [(v, 0.5 * F) for (v, F) in self.scaled])
        return half + half.T


def block(rows) -> "AffineExpr":
    """Assemble a block matrix from a 2-D list of AffineExpr / arrays / None."""
    rows = [[e if isinstance(e, AffineExpr) or e is None else AffineExpr.constant(e)
             for e in row] for row in rows]
    row_h = [next(e for e in row if e is not None).shape[0] for row in rows]
    col_w = [next(rows[i][j] for i in range(len(rows)) if rows[i][j] is not None).shape[1]
             for j in range(len(rows[0]))]
    total = (sum(row_h), sum(col_w))
    out = AffineExpr(total)
    r0 = 0
    for i, row in enumerate(rows):
        c0 = 0
        for j, e in enumerate(row):
            if e is not None:
                if e.shape != (row_h[i], col_w[j]):
                    raise ValueError(f"block ({i},{j}) has shape {e.shape}, "
                                     f"expected {(row_h[i], col_w[j])}")
                Ei = np.zeros((total[0], row_h[i]))
                Ei[r0:r0 + row_h[i]] = np.eye(row_h[i])
                Ej = np.zeros((col_w[j], total[1]))
                Ej[:, c0:c0 + col_w[j]] = np.eye(col_w[j])
                out.const[r0:r0 + row_h[i], c0:c0 + col_w[j]] += e.const
                out.sandwich.extend((Ei @ L, v, R @ Ej, t) for (L, v, R, t) in e.sandwich)
                out.scaled.extend((v, Ei @ F @ Ej) for (v, F) in e.scaled)
            c0 += col_w[j]
        r0 += row_h[i]
    return out


@dataclass
class MatrixConstraint:
    """expr <= -eps*I in the semidefinite order (eps=0 for non-strict)."""

    expr: AffineExpr
    eps: float
    name: str = ""

    @property
    def dim(self) -> int:
        return self.expr.shape[0]

    def violation(self, env: dict) -> float:
        """lambda_max(expr) + eps; feasible means <= RECHECK_TOL."""
        M = self.expr.value(env)
        return float(np.linalg.eigvalsh(0.5 * (M + M.T)).max()) + self.eps


@dataclass
class LinearConstraint:
    """sum coef_i * scalar_i  (sense)  bound."""

    terms: list  # (coef, var_name)
    sense: str   # "<=", ">=", "=="
    bound: float
    name: str = ""

    def violation(self, env: dict) -> float:
        v = sum(c * float(env[n]) for c, n in self.terms)
        if self.sense == "<=":
            return v - self.bound
        if self.sense == ">=":
            return self.bound - v
        return abs(v - self.bound)


@dataclass
class LmiProblem:
    """Feasibility problem: matrix inequalities plus linear constraints."""

    variables: list = field(default_factory=list)
    matrix_constraints: list = field(default_factory=list)
    linear_constraints: list = field(default_factory=list)

    def add_variable(self, var):
        if any(v.name == var.name for v in self.variables):
            raise ValueError(f"duplicate variable name {var.name!r}")
        self.variables.append(var)
        return var

    def add_matrix_constraint(self, expr: AffineExpr, eps=None, name=""):
        if expr.shape[0] != expr.shape[1]:
            raise ValueError("matrix constraints must be square")
        if eps is None:
            eps = default_strictness(expr.shape[0])
        self.matrix_constraints.append(MatrixConstraint(expr.symmetrized(), eps, name))

    def add_linear_constraint(self, terms, sense, bound, name=""):
        if sense not in ("<=", ">=", "=="):
            raise ValueError(f"bad sense {sense!r}")
        self.linear_constraints.append(LinearConstraint(list(terms), sense, bound, name))

    @property
    def scalar_variable_count(self) -> int:
        return sum(v.scalar_count for v in self.variables)


@dataclass
class LmiSolution:
    status: str
    values: dict = field(default_factory=dict)
    max_constraint_violation: float = np.inf
    slack: float = np.nan
    solver: str = ""
    wall_time: float = 0.0
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def _quiet_call(fn):
    """Run fn with OS-level stderr silenced (native solver panics are noisy)."""
    if os.environ.get("ZF_SOLVER_VERBOSE"):
        return fn()
    devnull = os.open(os.devnull, os.O_WRONLY)
    saved = os.dup(2)
    try:
        os.dup2(devnull, 2)
        return fn()
    finally:
        os.dup2(saved, 2)
        os.close(saved)
        os.close(devnull)


def _solver_chain():
    maxiter = int(os.environ.get("ZF_SOLVER_MAXITER", "0")) or None
    chain = [("CLARABEL", cp.CLARABEL, {} if maxiter is None else {"max_iter": maxiter})]
    if "CVXOPT" in cp.installed_solvers():
        chain.append(("CVXOPT", cp.CVXOPT, {}))
    scs_opts = {"eps_abs": 1e-9, "eps_rel": 1e-9,
                "max_iters": maxiter or 100000}
    chain.append(("SCS", cp.SCS, scs_opts))
    return chain


def _build_cvxpy_vars(problem: LmiProblem) -> dict:
    vmap = {}
    for v in problem.variables:
        if isinstance(v, SymmetricVar):
            vmap[v.name] = cp.Variable((v.dim, v.dim), symmetric=True, name=v.name)
        elif isinstance(v, GeneralVar):
            vmap[v.name] = cp.Variable((v.rows, v.cols), name=v.name)
        else:
            vmap[v.name] = cp.Variable(name=v.name)
    return vmap


def _linear_cvxpy(problem, vmap):
    cons = []
    for lc in problem.linear_constraints:
        lhs = sum(c * vmap[n] for c, n in lc.terms)
        if lc.sense == "<=":
            cons.append(lhs <= lc.bound)
        elif lc.sense == ">=":
            cons.append(lhs >= lc.bound)
        else:
            cons.append(lhs == lc.bound)
    return cons


def _extract(problem, vmap) -> dict:
    env = {}
    for v in problem.variables:
        val = vmap[v.name].value
        if val is None:
            return {}
        env[v.name] = float(val) if isinstance(v, ScalarVar) else np.asarray(val)
    return env


def _recheck(problem: LmiProblem, env: dict) -> float:
    worst = 0.0
    for mc in problem.matrix_constraints:
        worst = max(worst, mc.violation(env))
    for lc in problem.linear_constraints:
        worst = max(worst, lc.violation(env))
    return worst


def _attempt(problem, objective_slack: bool):
    """One cvxpy formulation; returns (status_claimed, env, slack)."""
    vmap = _build_cvxpy_vars(problem)
    cons = _linear_cvxpy(problem, vmap)
    if objective_slack:
        t = cp.Variable(name="_slack")
        for mc in problem.matrix_constraints:
            cons.append(mc.expr.to_cvxpy(vmap) << -t * np.eye(mc.dim))
        cons.append(t <= 1.0)
        objective = cp.Maximize(t)
    else:
        t = None
        for mc in problem.matrix_constraints:
            cons.append(mc.expr.to_cvxpy(vmap) << -mc.eps * np.eye(mc.dim))
        objective = cp.Minimize(0)
    saw_infeasible = False
    for label, solver, opts in _solver_chain():
        prob = cp.Problem(objective, cons)
        try:
            _quiet_call(lambda: prob.solve(solver=solver, verbose=False, **opts))
        except BaseException as exc:  # Clarabel raises pyo3 panics outside Exception
            if type(exc).__name__ not in ("SolverError", "PanicException",
                                          "ArithmeticError", "ZeroDivisionError",
                                          "ValueError", "OverflowError"):
                raise
            continue
        if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            saw_infeasible = True
            continue
        env = _extract(problem, vmap)
        if env:
            slack = float(t.value) if (t is not None and t.value is not None) else np.nan
            return label, prob.status, env, slack, saw_infeasible
    return None, None, {}, np.nan, saw_infeasible


def solve_feasibility(problem: LmiProblem) -> LmiSolution:
    """Decide feasibility; solutions are certified by eigenvalue re-check.

    A single slack-maximization pass decides both ways: the slack form is
    always solvable, a maximized slack above SLACK_FLOOR (certified by the
    re-check, at the declared margin where the problem allows it) means
    feasible, a nonpositive slack means the strict problem is empty.  Plants
    near the stability boundary leave only a sliver of slack, which the
    plain feasibility form stalls at but the slack form lands inside.
    """
    t0 = time.perf_counter()
    solver, status, env, slack, saw_inf = _attempt(problem, objective_slack=True)
    if env and np.isfinite(slack) and slack >= SLACK_FLOOR:
        worst = max(mc.violation(env) - mc.eps + min(mc.eps, slack / 2.0)
                    for mc in problem.matrix_constraints)
        worst = max(worst, max((lc.violation(env)
                                for lc in problem.linear_constraints), default=0.0))
        if worst <= RECHECK_TOL:
            return LmiSolution(FEASIBLE, env, worst, slack=slack, solver=solver,
                               wall_time=time.perf_counter() - t0,
                               message=f"slack pass ({status}, t*={slack:.2e})")
    if saw_inf or (env and np.isfinite(slack) and slack < SLACK_FLOOR):
        return LmiSolution(INFEASIBLE, {}, solver=solver or "",
                           wall_time=time.perf_counter() - t0,
                           message="infeasible (solver certificate or nonpositive slack)")
    return LmiSolution(INACCURATE, {}, solver=solver or "",
                       wall_time=time.perf_counter() - t0,
                       message="no solver produced a certified answer")


def dump_problem(problem: LmiProblem, path) -> None:
    """Debug dump: per-variable coefficient matrices in coordinate form."""
    names = []
    for v in problem.variables:
        if isinstance(v, ScalarVar):
            names.append((v.name, None))
        elif isinstance(v, SymmetricVar):
            names.extend((v.name, (i, j)) for i in range(v.dim) for j in range(i, v.dim))
        else:
            names.extend((v.name, (i, j)) for i in range(v.rows) for j in range(v.cols))

    def unit_env(target, idx):
        env = {}
        for v in problem.variables:
            if isinstance(v, ScalarVar):
                env[v.name] = 1.0 if (v.name == target and idx is None) else 0.0
            else:
                shape = (v.dim, v.dim) if isinstance(v, SymmetricVar) else (v.rows, v.cols)
                M = np.zeros(shape)
                if v.name == target and idx is not None:
                    M[idx] = 1.0
                    if isinstance(v, SymmetricVar):
                        M[idx[1], idx[0]] = 1.0
                env[v.name] = M
        return env

    zero_env = unit_env("", None)
    with open(path, "w") as f:
        for ci, mc in enumerate(problem.matrix_constraints):
            F0 = mc.expr.value(zero_env)
            f.write(f"matrix_constraint {ci} name={mc.name!r} dim={mc.dim} eps={mc.eps:.17g}\n")
            for (i, j) in zip(*np.nonzero(F0)):
                f.write(f"  F0 {i} {j} {F0[i, j]:.17g}\n")
            for name, idx in names:
                Fi = mc.expr.value(unit_env(name, idx)) - F0
                label = name if idx is None else f"{name}[{idx[0]},{idx[1]}]"
                for (i, j) in zip(*np.nonzero(Fi)):
                    f.write(f"  {label} {i} {j} {Fi[i, j]:.17g}\n")
        for lc in problem.linear_constraints:
            terms = " + ".join(f"{c:.17g}*{n}" for c, n in lc.terms)
            f.write(f"linear_constraint name={lc.name!r}: {terms} {lc.sense} {lc.bound:.17g}\n")
