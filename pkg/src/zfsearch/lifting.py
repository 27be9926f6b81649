"""FIR multiplier search via the lifting factorization.

The stacked-delay filter applied to [-G; 1] shares one chain of delayed
plant outputs and one chain of delayed inputs, so the lifted system has
n_p + 2n states.  The IQC middle matrix kappa(k, m) couples the two chains
and is affine in the taps; the KYP certificate X here is sign-indefinite.

The kappa stencil pairs the delayed -G rows with the conjugate tap, so a
feasible tap vector certifies the frequency condition for its time
reversal; ``solve_lifted`` reverses the recovered taps before returning,
after which the standard sweep verifier applies unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .fir import FirMultiplier, check_zf_class
from .hardfact import LIN_MARGIN
from .lti import RationalTransferFunction, StateSpaceModel, check_search_plant, \
    normalize_realization, tf_to_ss


@dataclass(frozen=True)
class LiftedRealization:
    """State space of the delay stack applied to [-G; 1]; outputs are
    -z^{-i} G(z) for rows 0..n and z^{-i} for rows n+1..2n+1."""

    A_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    D_hat: np.ndarray
    n: int
    n_p: int

    @property
    def state_dim(self) -> int:
        return self.n_p + 2 * self.n

    def row_response(self, row: int, omegas) -> np.ndarray:
        pts = np.exp(1j * np.asarray(omegas, dtype=float))
        ss = StateSpaceModel(self.A_hat, self.B_hat, self.C_hat[row],
                             float(self.D_hat[row, 0]))
        return ss.response(pts)


def build_lifted(G_ss: StateSpaceModel, n: int) -> LiftedRealization:
    """Minimal stacking: one chain of past plant outputs, one of past inputs."""
    if n < 1:
        raise ValueError("tap half-order n must be at least 1")
    if not G_ss.is_stable():
        raise ValueError("lifting requires a stable plant realization")
    n_p = G_ss.order
    N = n_p + 2 * n
    A = np.zeros((N, N))
    B = np.zeros((N, 1))
    A[:n_p, :n_p] = G_ss.A
    B[:n_p, 0] = G_ss.B.ravel()
    # chain of past outputs: q1+ = y = Cx + Du, qi+ = q(i-1)
    A[n_p, :n_p] = G_ss.C.ravel()
    B[n_p, 0] = G_ss.D
    for i in range(1, n):
        A[n_p + i, n_p + i - 1] = 1.0
    # chain of past inputs: r1+ = u, ri+ = r(i-1)
    B[n_p + n, 0] = 1.0
    for i in range(1, n):
        A[n_p + n + i, n_p + n + i - 1] = 1.0

    C = np.zeros((2 * (n + 1), N))
    D = np.zeros((2 * (n + 1), 1))
    C[0, :n_p] = -G_ss.C.ravel()
    D[0, 0] = -G_ss.D
    for i in range(1, n + 1):
        C[i, n_p + i - 1] = -1.0
    D[n + 1, 0] = 1.0
    for i in range(1, n + 1):
        C[n + 1 + i, n_p + n + i - 1] = 1.0
    return LiftedRealization(A, B, C, D, n, n_p)


def build_kappa(k: float, m: FirMultiplier) -> np.ndarray:
    """Coupling matrix of the lifted IQC, affine in the taps.

    Row 0 carries k*m_0..k*m_n against the input chain, rows 1..n carry
    k*m_{-i} against the lifted 1-row, and the center row collects -2m_0
    and the symmetrized tap sums.
    """
    if m.n_f != m.n_b:
        raise ValueError("lifting uses symmetric tap ranges n_f = n_b")
    n = m.n_f
    terms = kappa_tap_terms(n, k)
    K = terms[0].copy()
    for i in range(1, n + 1):
        K += m.tap(i) * terms[i] + m.tap(-i) * terms[-i]
    return K


def kappa_tap_terms(n: int, k: float) -> dict:
    """Decomposition kappa = T_0 + sum_{i != 0} m_i T_i."""
    dim = 2 * (n + 1)

    def sym(entries):
        M = np.zeros((dim, dim))
        for a, b, v in entries:
            M[a, b] += v
            if a != b:
                M[b, a] += v
        return M

    terms = {0: sym([(0, n + 1, k), (n + 1, n + 1, -2.0)])}
    for j in range(1, n + 1):
        terms[j] = sym([(0, n + 1 + j, k), (n + 1, n + 1 + j, -1.0)])
        terms[-j] = sym([(j, n + 1, k), (n + 1, n + 1 + j, -1.0)])
    return terms


def assemble_lifted_lmi(lifted: LiftedRealization, k: float, odd: bool) -> sdp.LmiProblem:
    """KYP LMI in (X, m) for the lifted factorization; X is unsigned."""
    N = lifted.state_dim
    CD = np.hstack([lifted.C_hat, lifted.D_hat])
    terms = kappa_tap_terms(lifted.n, k)
    Q = {i: CD.T @ T @ CD for i, T in terms.items()}
    AB = np.hstack([lifted.A_hat, lifted.B_hat])
    E0 = np.hstack([np.eye(N), np.zeros((N, 1))])

    problem = sdp.LmiProblem()
    X = problem.add_variable(sdp.SymmetricVar("X", N))
    expr = sdp.AffineExpr.term(AB.T, X, AB) - sdp.AffineExpr.term(E0.T, X, E0)
    expr = expr + sdp.AffineExpr.constant(Q[0])
    taps = [i for i in range(-lifted.n, lifted.n + 1) if i != 0]
    if not odd:
        for i in taps:
            problem.add_variable(sdp.ScalarVar(f"m[{i}]"))
            expr = expr + sdp.AffineExpr.scalar_term(sdp.ScalarVar(f"m[{i}]"), Q[i])
            problem.add_linear_constraint([(1.0, f"m[{i}]")], "<=", 0.0, name=f"m[{i}]<=0")
        problem.add_linear_constraint([(1.0, f"m[{i}]") for i in taps], ">=",
                                      LIN_MARGIN - 1.0, name="tap sum positive")
    else:
        for i in taps:
            problem.add_variable(sdp.ScalarVar(f"mp[{i}]"))
            problem.add_variable(sdp.ScalarVar(f"mn[{i}]"))
            expr = expr + sdp.AffineExpr.scalar_term(sdp.ScalarVar(f"mp[{i}]"), Q[i])
            expr = expr - sdp.AffineExpr.scalar_term(sdp.ScalarVar(f"mn[{i}]"), Q[i])
            problem.add_linear_constraint([(1.0, f"mp[{i}]")], ">=", 0.0, name=f"mp[{i}]>=0")
            problem.add_linear_constraint([(1.0, f"mn[{i}]")], ">=", 0.0, name=f"mn[{i}]>=0")
        both = [(1.0, f"mp[{i}]") for i in taps] + [(1.0, f"mn[{i}]") for i in taps]
        problem.add_linear_constraint(both, "<=", 1.0 - LIN_MARGIN, name="l1 below 2")
    problem.add_matrix_constraint(expr, name="lifted KYP")
    return problem


@dataclass(frozen=True)
class LiftedSearchResult:
    multiplier: FirMultiplier
    X: np.ndarray
    fdi_margin: float
    solution: sdp.LmiSolution


def solve_lifted(G: RationalTransferFunction, k: float, n: int, odd: bool,
                 grid_size: int = 2048) -> LiftedSearchResult | None:
    """Feasibility of the lifted LMI at slope k; returns a verified multiplier."""
    check_search_plant(G)
    if k <= 0:
        raise ValueError("slope k must be positive")
    G_cond = normalize_realization(tf_to_ss(G))
    lifted = build_lifted(G_cond, n)
    problem = assemble_lifted_lmi(lifted, k, odd)
    sol = sdp.solve_feasibility(problem)
    if not sol.feasible:
        return None
    coeffs = np.zeros(2 * n + 1)
    coeffs[n] = 1.0
    for i in range(-n, n + 1):
        if i == 0:
            continue
        if odd:
            coeffs[i + n] = sol.values[f"mp[{i}]"] - sol.values[f"mn[{i}]"]
        else:
            coeffs[i + n] = sol.values[f"m[{i}]"]
    m = FirMultiplier(n, n, coeffs).reversed()
    ok, _ = check_zf_class(m, odd)
    if not ok:
        return None
    from .analysis import verify_fdi

    margin = verify_fdi(m, G, k, grid_size)
    if margin <= 0.0:
        return None
    return LiftedSearchResult(m, sol.values["X"], margin, sol)
