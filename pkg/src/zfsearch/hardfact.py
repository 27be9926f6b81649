"""FIR multiplier search via the hard factorization.

P(z) = 1 + k G(z) is augmented with an input delay chain so that every
shifted copy z^{-i} P(z) (and, for anticausal shifts, the causal part plus
a delayed FIR remainder) shares one stable state matrix.  The positivity
condition Re{M P} > 0 then becomes a single KYP-style LMI in a symmetric X
and the taps m, with the multiplier-class conditions entering as linear
constraints.  Any certificate X is necessarily positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .fir import FirMultiplier, check_zf_class
from .lti import RationalTransferFunction, StateSpaceModel, check_search_plant, \
    normalize_realization, tf_to_ss

# Linear class constraints use this margin so the feasible set stays closed.
LIN_MARGIN = 1e-8


@dataclass(frozen=True)
class AugmentedRealization:
    """Shared realization of the shifted plant copies P_i(z) = C_i (zI-A)^{-1} B + D_i."""

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    C_n: np.ndarray
    C_d: dict           # i -> delay output row, i = 1..n_f
    C: dict             # i -> output row of P_i, i = -n_f..n_b
    D: dict             # i -> feedthrough of P_i
    M_f: np.ndarray
    n_f: int
    n_b: int
    n_p: int

    @property
    def n(self) -> int:
        return max(self.n_f, self.n_b)

    @property
    def state_dim(self) -> int:
        return self.n_p + self.n

    def shifted_response(self, i: int, omegas) -> np.ndarray:
        """P_i(e^{jw}) on a grid."""
        ss = StateSpaceModel(self.A_tilde, self.B_tilde, self.C[i], self.D[i])
        return ss.response(np.exp(1j * np.asarray(omegas, dtype=float)))


def build_augmentation(P: StateSpaceModel, n_f: int, n_b: int) -> AugmentedRealization:
    """Delay-chain augmentation of a stable plant realization.

    The chain feeds the plant with the n-step-delayed input, so z^{-n} P(z)
    is read out by C_n, positive shifts fall out of powers of the state
    matrix, and negative shifts split into a causal part plus delayed
    impulse-response samples picked off the chain.
    """
    if n_f < 0 or n_b < 0 or max(n_f, n_b) < 1:
        raise ValueError("need max(n_f, n_b) >= 1 (a static multiplier is the circle test)")
    if not P.is_stable():
        raise ValueError("augmentation requires a stable plant realization")
    n = max(n_f, n_b)
    n_p = P.order
    d = n_p + n
    At = np.zeros((d, d))
    At[:n_p, :n_p] = P.A
    At[:n_p, n_p:n_p + 1] = P.B
    if n > 1:
        At[n_p:n_p + n - 1, n_p + 1:] = np.eye(n - 1)
    Bt = np.zeros((d, 1))
    Bt[-1, 0] = 1.0
    Cn = np.zeros((1, d))
    Cn[0, :n_p] = P.C
    Cn[0, n_p] = P.D

    powers = [np.eye(d)]
    for _ in range(2 * n + 1):
        powers.append(powers[-1] @ At)
    Cd = {i: np.eye(d)[d - i][None, :] for i in range(1, n_f + 1)}

    def markov(exponent: int) -> float:
        return float((Cn @ powers[exponent] @ Bt).item())

    C = {}
    D = {}
    for i in range(1, n_b + 1):
        C[i] = Cn @ powers[n - i]
        D[i] = 0.0
    C[0] = Cn @ powers[n]
    D[0] = markov(n - 1)
    for i in range(-n_f, 0):
        Ci = (Cn @ powers[n - i]).copy()
        for j in range(1, -i + 1):
            Ci += markov(n - i - j - 1) * Cd[j]
        C[i] = Ci
        D[i] = markov(n - i - 1)

    rows = [np.concatenate([C[i].ravel(), [D[i]]]) for i in range(-n_f, n_b + 1)]
    rows.append(np.concatenate([np.zeros(d), [1.0]]))
    return AugmentedRealization(At, Bt, Cn, Cd, C, D, np.array(rows), n_f, n_b, n_p)


def _tap_coefficient_matrices(aug: AugmentedRealization) -> dict:
    """Q_i such that the multiplier quadratic form is sum_i m_i Q_i."""
    Mf = aug.M_f
    last = Mf.shape[0] - 1
    Q = {}
    for i in range(-aug.n_f, aug.n_b + 1):
        r = Mf[i + aug.n_f]
        Q[i] = np.outer(r, Mf[last]) + np.outer(Mf[last], r)
    return Q


def assemble_hard_lmi(aug: AugmentedRealization, odd: bool) -> sdp.LmiProblem:
    """KYP LMI in (X, m) with the multiplier-class linear constraints."""
    d = aug.state_dim
    Q = _tap_coefficient_matrices(aug)
    AB = np.hstack([aug.A_tilde, aug.B_tilde])
    E0 = np.hstack([np.eye(d), np.zeros((d, 1))])

    problem = sdp.LmiProblem()
    X = problem.add_variable(sdp.SymmetricVar("X", d))
    expr = sdp.AffineExpr.term(AB.T, X, AB) - sdp.AffineExpr.term(E0.T, X, E0)
    expr = expr - sdp.AffineExpr.constant(Q[0])
    taps = [i for i in range(-aug.n_f, aug.n_b + 1) if i != 0]
    if not odd:
        for i in taps:
            problem.add_variable(sdp.ScalarVar(f"m[{i}]"))
            expr = expr - sdp.AffineExpr.scalar_term(sdp.ScalarVar(f"m[{i}]"), Q[i])
            problem.add_linear_constraint([(1.0, f"m[{i}]")], "<=", 0.0, name=f"m[{i}]<=0")
        problem.add_linear_constraint([(1.0, f"m[{i}]") for i in taps], ">=",
                                      LIN_MARGIN - 1.0, name="tap sum positive")
    else:
        for i in taps:
            problem.add_variable(sdp.ScalarVar(f"mp[{i}]"))
            problem.add_variable(sdp.ScalarVar(f"mn[{i}]"))
            expr = expr - sdp.AffineExpr.scalar_term(sdp.ScalarVar(f"mp[{i}]"), Q[i])
            expr = expr + sdp.AffineExpr.scalar_term(sdp.ScalarVar(f"mn[{i}]"), Q[i])
            problem.add_linear_constraint([(1.0, f"mp[{i}]")], ">=", 0.0, name=f"mp[{i}]>=0")
            problem.add_linear_constraint([(1.0, f"mn[{i}]")], ">=", 0.0, name=f"mn[{i}]>=0")
        both = [(1.0, f"mp[{i}]") for i in taps] + [(1.0, f"mn[{i}]") for i in taps]
        problem.add_linear_constraint(both, "<=", 1.0 - LIN_MARGIN, name="l1 below 2")
    problem.add_matrix_constraint(expr, name="hard factorization KYP")
    return problem


def extract_multiplier(values: dict, n_f: int, n_b: int, odd: bool) -> FirMultiplier:
    coeffs = np.zeros(n_f + n_b + 1)
    coeffs[n_f] = 1.0
    for i in range(-n_f, n_b + 1):
        if i == 0:
            continue
        if odd:
            coeffs[i + n_f] = values[f"mp[{i}]"] - values[f"mn[{i}]"]
        else:
            coeffs[i + n_f] = values[f"m[{i}]"]
    return FirMultiplier(n_f, n_b, coeffs)


@dataclass(frozen=True)
class HardSearchResult:
    multiplier: FirMultiplier
    X: np.ndarray
    fdi_margin: float
    solution: sdp.LmiSolution


def loop_plant(G_ss: StateSpaceModel, k: float) -> StateSpaceModel:
    """Realization of P = 1 + k G reusing G's state matrices."""
    return StateSpaceModel(G_ss.A, G_ss.B, k * G_ss.C, 1.0 + k * G_ss.D, G_ss.domain)


def solve_hard(G: RationalTransferFunction, k: float, n_f: int, n_b: int,
               odd: bool, grid_size: int = 2048) -> HardSearchResult | None:
    """Feasibility of the hard-factorization LMI at slope k.

    Returns a verified certificate (class membership, X > 0 and a positive
    frequency-sweep margin) or None when no certified multiplier exists at
    this slope.
    """
    check_search_plant(G)
    if k <= 0:
        raise ValueError("slope k must be positive")
    P = normalize_realization(loop_plant(tf_to_ss(G), k))
    aug = build_augmentation(P, n_f, n_b)
    problem = assemble_hard_lmi(aug, odd)
    sol = sdp.solve_feasibility(problem)
    if not sol.feasible:
        return None
    m = extract_multiplier(sol.values, n_f, n_b, odd)
    ok, _ = check_zf_class(m, odd)
    if not ok:
        return None
    X = sol.values["X"]
    if np.linalg.eigvalsh(X).min() <= 0.0:
        return None
    from .analysis import verify_fdi

    margin = verify_fdi(m, G, k, grid_size)
    if margin <= 0.0:
        return None
    return HardSearchResult(m, X, margin, sol)
