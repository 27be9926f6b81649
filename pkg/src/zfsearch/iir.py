"""IIR multiplier searches (causal and anticausal), odd nonlinearities only.

The multiplier M(z) = 1 + C_u (zI - A_u)^{-1} B_u is parameterized through
a change of variables and searched jointly with its l1-norm certificate:
one LMI encodes positivity of M*(plant), two more bound the l1 norm of
M - 1 below 1 at a fixed decay rate lambda, which is line-searched over a
grid.  The anticausal search runs the same LMIs on the inverse-loop plant
(1 + kG)^{-1}; the recovered multiplier then acts anticausally on the
original loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .lti import RationalTransferFunction, StateSpaceModel, check_search_plant, \
    normalize_realization, tf_to_ss

CAUSAL = "causal"
ANTICAUSAL = "anticausal"

# Certified l1 estimates may exceed the class bound by at most this much.
L1_TOL = 1e-6

MU_MARGIN = 1e-8


def default_lambda_grid(points: int = 30) -> np.ndarray:
    """Logarithmically spaced decay rates in [0.01, 0.99]."""
    return np.geomspace(0.01, 0.99, points)


@dataclass
class IirSearchConfig:
    lambda_grid: np.ndarray = field(default_factory=default_lambda_grid)
    grid_size: int = 2048

    def __post_init__(self):
        g = np.asarray(self.lambda_grid, dtype=float)
        if g.size == 0 or g.min() <= 0.0 or g.max() >= 1.0:
            raise ValueError("lambda grid must lie strictly inside (0, 1)")
        self.lambda_grid = g


@dataclass(frozen=True)
class IirMultiplier:
    """State-space multiplier, unit feedthrough; direction fixes the shift sign."""

    direction: str
    A_u: np.ndarray
    B_u: np.ndarray
    C_u: np.ndarray

    def __post_init__(self):
        if self.direction not in (CAUSAL, ANTICAUSAL):
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def order(self) -> int:
        return self.A_u.shape[0]

    def spectral_radius(self) -> float:
        if self.order == 0:
            return 0.0
        return float(np.abs(np.linalg.eigvals(self.A_u)).max())

    def response(self, omegas) -> np.ndarray:
        """M(e^{jw}); anticausal multipliers evaluate at e^{-jw} inside."""
        w = np.atleast_1d(np.asarray(omegas, dtype=float))
        pts = np.exp(-1j * w) if self.direction == ANTICAUSAL else np.exp(1j * w)
        I = np.eye(self.order)
        out = np.array(
            [(self.C_u @ np.linalg.solve(p * I - self.A_u, self.B_u)).item() for p in pts]
        ) + 1.0
        return out if np.ndim(omegas) else out[0]

    def impulse_taps(self, count: int) -> np.ndarray:
        """First `count` off-center taps |i| = 1..count of the impulse response."""
        taps = np.zeros(count)
        x = self.B_u.copy()
        for j in range(count):
            taps[j] = float((self.C_u @ x).item())
            x = self.A_u @ x
        return taps

    def l1_bound(self, tail_tol: float = 1e-9, max_terms: int = 200000) -> float:
        """Certified upper bound on the l1 norm of M - 1.

        Truncated impulse-response sum plus the geometric tail bound
        ||C|| ||A^N B|| / (1 - rho) at the spectral radius rho.
        """
        rho = self.spectral_radius()
        if rho >= 1.0:
            return math.inf
        total = 0.0
        x = self.B_u.copy()
        cn = float(np.linalg.norm(self.C_u))
        for j in range(max_terms):
            total += abs(float((self.C_u @ x).item()))
            x = self.A_u @ x
            if j >= 200 and cn * float(np.linalg.norm(x)) / (1.0 - rho) < tail_tol:
                break
        return total + cn * float(np.linalg.norm(x)) / (1.0 - rho)

    def forward_realization(self) -> StateSpaceModel:
        """Causal realization of an anticausal multiplier (needs A_u invertible)."""
        if self.direction != ANTICAUSAL:
            raise ValueError("forward realization applies to anticausal multipliers")
        Ait = np.linalg.inv(self.A_u).T
        return StateSpaceModel(Ait, Ait @ self.C_u.T, self.B_u.T @ Ait,
                               1.0 - float((self.B_u.T @ Ait @ self.C_u.T).item()))

    def to_json(self) -> dict:
        return {"direction": self.direction, "A_u": self.A_u.tolist(),
                "B_u": self.B_u.tolist(), "C_u": self.C_u.tolist()}


def recover_multiplier(S11: np.ndarray, P11: np.ndarray, A_hat: np.ndarray,
                       B_hat: np.ndarray, C_hat: np.ndarray) -> tuple:
    """Undo the change of variables: (A_u, B_u, C_u) from the LMI solution."""
    U = P11 - S11
    cond = np.linalg.cond(U)
    if cond > 1e12:
        raise ValueError(f"P11 - S11 is numerically singular (cond = {cond:.3e})")
    A_u = -np.linalg.solve(U, A_hat)
    B_u = -np.linalg.solve(U, B_hat)
    return A_u, B_u, np.atleast_2d(C_hat)


def lemma2_check(A_u, B_u, C_u, P, lam: float, mu: float, gamma: float = 1.0,
                 tol: float = 1e-7) -> bool:
    """Re-verify the l1-bound certificate matrices by eigenvalue computation."""
    n = A_u.shape[0]
    top = np.block([[A_u.T @ P @ A_u - lam * P, A_u.T @ P @ B_u],
                    [B_u.T @ P @ A_u, B_u.T @ P @ B_u - mu * np.eye(1)]])
    bot = np.block([[(lam - 1.0) * P + C_u.T @ C_u, np.zeros((n, 1))],
                    [np.zeros((1, n)), (mu - gamma ** 2) * np.eye(1)]])
    return (np.linalg.eigvalsh(0.5 * (top + top.T)).max() < tol
            and np.linalg.eigvalsh(0.5 * (bot + bot.T)).max() < tol)


def transformed_plant(G: RationalTransferFunction, k: float,
                      direction: str) -> StateSpaceModel:
    """Plant the LMIs run on: 1 + kG (causal) or its inverse (anticausal)."""
    g = tf_to_ss(G)
    if direction == CAUSAL:
        return StateSpaceModel(g.A, g.B, k * g.C, 1.0 + k * g.D)
    scale = k * g.D + 1.0
    if abs(scale) < 1e-12:
        raise ValueError("k*D + 1 = 0: inverse-loop plant undefined")
    A_p = g.A - g.B @ ((k / scale) * g.C)
    return StateSpaceModel(A_p, -g.B / scale, (k / scale) * g.C, 1.0 / scale)


def assemble_iir_lmis(P_ss: StateSpaceModel, lam: float) -> sdp.LmiProblem:
    """The positivity LMI plus the two l1-bound LMIs at a fixed lambda."""
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    Ap, Bp, Cp, Dp = P_ss.A, P_ss.B, P_ss.C, P_ss.D
    n = P_ss.order
    In = np.eye(n)
    I1 = np.eye(1)
    Z1n = np.zeros((1, n))
    Zn1 = np.zeros((n, 1))

    problem = sdp.LmiProblem()
    S = problem.add_variable(sdp.SymmetricVar("S11", n))
    P = problem.add_variable(sdp.SymmetricVar("P11", n))
    Ah = problem.add_variable(sdp.GeneralVar("A_hat", n, n))
    Bh = problem.add_variable(sdp.GeneralVar("B_hat", n, 1))
    Ch = problem.add_variable(sdp.GeneralVar("C_hat", 1, n))
    mu = problem.add_variable(sdp.ScalarVar("mu"))

    T = sdp.AffineExpr.term
    TS = lambda R: T(In, S, R)
    TP = lambda R: T(In, P, R)
    negS = T(-In, S, In)
    negP = T(-In, P, In)
    c31 = sdp.AffineExpr.constant(-Cp) + T(-I1, Ch, In)
    c32 = sdp.AffineExpr.constant(-Cp)
    c33 = sdp.AffineExpr.constant([[-2.0 * Dp]])
    c41 = TS(Ap)
    c43 = TS(Bp)
    c51 = TP(Ap) + T(In, Bh, Cp) + T(In, Ah, In)
    c52 = TP(Ap) + T(In, Bh, Cp)
    c53 = TP(Bp) + T(Dp * In, Bh, I1)
    M1 = sdp.block([
        [negS,    negS,    c31.T, c41.T, c51.T],
        [negS,    negP,    c32.T, c41.T, c52.T],
        [c31,     c32,     c33,   c43.T, c53.T],
        [c41,     c41,     c43,   negS,  negS],
        [c51,     c52,     c53,   negS,  negP],
    ])
    problem.add_matrix_constraint(M1, name="positivity")

    SmP = T(lam * In, S, In) + T(-lam * In, P, In)
    SmP1 = T(In, S, In) + T(-In, P, In)
    negAh = T(-In, Ah, In)
    negBh = T(-In, Bh, I1)
    muI = sdp.AffineExpr.scalar_term(mu, [[-1.0]])
    M2 = sdp.block([
        [SmP,   Zn1, negAh.T],
        [Z1n,   muI, negBh.T],
        [negAh, negBh, SmP1],
    ])
    problem.add_matrix_constraint(M2, name="l1 bound, dynamics")

    PmS = T((lam - 1.0) * In, P, In) + T(-(lam - 1.0) * In, S, In)
    ChT = T(I1, Ch, In)
    mu1 = sdp.AffineExpr.scalar_term(mu, [[1.0]]) + sdp.AffineExpr.constant([[-1.0]])
    M3 = sdp.block([
        [PmS, Zn1, ChT.T],
        [Z1n, mu1, np.zeros((1, 1))],
        [ChT, np.zeros((1, 1)), sdp.AffineExpr.constant([[-1.0]])],
    ])
    problem.add_matrix_constraint(M3, name="l1 bound, output")

    problem.add_matrix_constraint(negS, name="S11 positive definite")
    problem.add_matrix_constraint(negP, name="P11 positive definite")
    problem.add_linear_constraint([(1.0, "mu")], ">=", MU_MARGIN, name="mu > 0")
    problem.add_linear_constraint([(1.0, "mu")], "<=", 1.0 - MU_MARGIN, name="mu < 1")
    return problem


@dataclass(frozen=True)
class IirSearchResult:
    multiplier: IirMultiplier
    lam: float
    mu: float
    fdi_margin: float
    l1_bound: float
    solution: sdp.LmiSolution


def _closed_loop_stable(G: RationalTransferFunction, k: float) -> bool:
    g = tf_to_ss(G)
    scale = 1.0 + k * g.D
    if abs(scale) < 1e-12 or g.order == 0:
        return abs(scale) >= 1e-12
    A_cl = g.A - g.B @ ((k / scale) * g.C)
    return bool(np.abs(np.linalg.eigvals(A_cl)).max() < 1.0)


def _search(G: RationalTransferFunction, k: float, cfg: IirSearchConfig,
            direction: str) -> IirSearchResult | None:
    check_search_plant(G)
    if k <= 0:
        raise ValueError("slope k must be positive")
    if not _closed_loop_stable(G, k):
        return None
    P_ss = normalize_realization(transformed_plant(G, k, direction))
    from .analysis import verify_fdi

    for lam in cfg.lambda_grid:
        sol = sdp.solve_feasibility(assemble_iir_lmis(P_ss, float(lam)))
        if not sol.feasible:
            continue
        try:
            A_u, B_u, C_u = recover_multiplier(sol.values["S11"], sol.values["P11"],
                                               sol.values["A_hat"], sol.values["B_hat"],
                                               sol.values["C_hat"])
        except ValueError:
            continue
        m = IirMultiplier(direction, A_u, B_u, C_u)
        if m.spectral_radius() >= 1.0:
            continue
        l1 = m.l1_bound()
        if l1 >= 1.0 + L1_TOL:
            continue
        margin = verify_fdi(m, G, k, cfg.grid_size)
        if margin <= 0.0:
            continue
        return IirSearchResult(m, float(lam), float(sol.values["mu"]), margin, l1, sol)
    return None


def causal_search(G: RationalTransferFunction, k: float,
                  cfg: IirSearchConfig | None = None) -> IirSearchResult | None:
    """Causal multiplier certifying slope k (odd nonlinearities)."""
    return _search(G, k, cfg or IirSearchConfig(), CAUSAL)


def anticausal_search(G: RationalTransferFunction, k: float,
                      cfg: IirSearchConfig | None = None) -> IirSearchResult | None:
    """Anticausal multiplier certifying slope k (odd nonlinearities)."""
    return _search(G, k, cfg or IirSearchConfig(), ANTICAUSAL)
