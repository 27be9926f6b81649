"""SISO LTI plant models: rational transfer functions, state-space
realizations, frequency response, ZOH discretization and the Nyquist value.

Transfer functions carry coefficient vectors in descending powers of z
(discrete) or s (continuous).  State-space realizations follow the usual
x+ = Ax + Bu, y = Cx + Du convention with scalar input and output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.linalg import schur
from scipy.signal import cont2discrete, tf2ss

DISCRETE = "z"
CONTINUOUS = "s"

# Plants whose poles sit closer than this to the stability boundary are
# rejected by the searches; benchmark plants are comfortably away from it.
BOUNDARY_TOL = 1e-9

# Gains above this cap are reported as an unbounded Nyquist value.
NYQUIST_CAP = 1.0e6


@dataclass(frozen=True)
class RationalTransferFunction:
    """Real-rational SISO transfer function in z or s.

    Parameters
    ----------
    num, den : array_like
        Polynomial coefficients in descending powers.
    domain : str
        ``"z"`` for discrete time, ``"s"`` for continuous time.
    """

    num: np.ndarray
    den: np.ndarray
    domain: str = DISCRETE

    def __post_init__(self):
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        den = np.atleast_1d(np.asarray(self.den, dtype=float))
        den = np.trim_zeros(den, "f")
        if den.size == 0:
            raise ValueError("denominator is identically zero")
        if num.size > 1:
            trimmed = np.trim_zeros(num, "f")
            num = trimmed if trimmed.size else np.zeros(1)
        if self.domain not in (DISCRETE, CONTINUOUS):
            raise ValueError(f"unknown domain {self.domain!r} (expected 'z' or 's')")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def order(self) -> int:
        return self.den.size - 1

    @property
    def is_proper(self) -> bool:
        return self.num.size <= self.den.size

    def poles(self) -> np.ndarray:
        return np.roots(self.den) if self.den.size > 1 else np.zeros(0)

    def zeros(self) -> np.ndarray:
        return np.roots(self.num) if self.num.size > 1 else np.zeros(0)

    def is_stable(self, tol: float = 0.0) -> bool:
        p = self.poles()
        if p.size == 0:
            return True
        if self.domain == DISCRETE:
            return bool(np.abs(p).max() < 1.0 - tol)
        return bool(p.real.max() < -tol)

    def boundary_distance(self) -> float:
        """Distance of the closest pole to the stability boundary."""
        p = self.poles()
        if p.size == 0:
            return math.inf
        if self.domain == DISCRETE:
            return float(np.abs(np.abs(p) - 1.0).min())
        return float(np.abs(p.real).min())

    def __call__(self, points) -> np.ndarray:
        """Evaluate the rational function at complex points."""
        pts = np.asarray(points, dtype=complex)
        denv = np.polyval(self.den, pts)
        bad = np.abs(denv) < 1e-12
        if np.any(bad):
            where = np.atleast_1d(pts)[np.atleast_1d(bad)][0]
            raise ValueError(f"evaluation at a pole: denominator vanishes at {where}")
        return np.polyval(self.num, pts) / denv

    def scaled(self, alpha: float) -> "RationalTransferFunction":
        return RationalTransferFunction(alpha * self.num, self.den, self.domain)


@dataclass(frozen=True)
class StateSpaceModel:
    """State-space realization (A, B, C, D) of a SISO system."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    domain: str = DISCRETE

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(n, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, n)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", float(self.D))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def is_stable(self) -> bool:
        if self.order == 0:
            return True
        eig = np.linalg.eigvals(self.A)
        if self.domain == DISCRETE:
            return bool(np.abs(eig).max() < 1.0)
        return bool(eig.real.max() < 0.0)

    def response(self, points) -> np.ndarray:
        """Transfer function C (pI - A)^{-1} B + D at complex points p."""
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        if self.order == 0:
            out = np.full(pts.shape, complex(self.D))
        else:
            I = np.eye(self.order)
            out = np.array(
                [(self.C @ np.linalg.solve(p * I - self.A, self.B)).item() for p in pts]
            ) + self.D
        return out if np.ndim(points) else out[0]

    def similarity(self, T: np.ndarray) -> "StateSpaceModel":
        """Change of state coordinates x = T x' (same transfer function)."""
        Ti = np.linalg.inv(T)
        return StateSpaceModel(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D, self.domain)


def tf_to_ss(G: RationalTransferFunction) -> StateSpaceModel:
    """Controllable-canonical realization of a proper transfer function."""
    if not G.is_proper:
        raise ValueError(
            f"improper transfer function: deg num {G.num.size - 1} > deg den {G.den.size - 1}"
        )
    if G.den.size == 1:
        return StateSpaceModel(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)),
                               float(G.num[-1] / G.den[0]) if G.num.size == 1 else 0.0,
                               G.domain)
    A, B, C, D = tf2ss(G.num, G.den)
    return StateSpaceModel(A, B, C, float(np.asarray(D).ravel()[0]), G.domain)


def freq_response(G: RationalTransferFunction, omegas) -> np.ndarray:
    """Frequency response on a grid: G(e^{jw}) (discrete) or G(jw) (continuous)."""
    w = np.asarray(omegas, dtype=float)
    if w.size == 0:
        raise ValueError("empty frequency grid")
    pts = np.exp(1j * w) if G.domain == DISCRETE else 1j * w
    return G(pts)


def _spectral_abscissa(A: np.ndarray, domain: str) -> float:
    """Stability margin indicator: max |eig| (discrete) or max Re eig (continuous)."""
    if A.shape[0] == 0:
        return -math.inf if domain == CONTINUOUS else 0.0
    eig = np.linalg.eigvals(A)
    return float(np.abs(eig).max()) if domain == DISCRETE else float(eig.real.max())


def _stable_for_all_gains(ss: StateSpaceModel, K: float, tau_grid: np.ndarray) -> bool:
    """Closed loop A - B*(tau*K)*C stable on the tau grid, with local refinement
    around the worst grid point to guard against narrow instability windows."""
    limit = 1.0 if ss.domain == DISCRETE else 0.0

    def rho(tau: float) -> float:
        return _spectral_abscissa(ss.A - ss.B * (tau * K) @ ss.C, ss.domain)

    vals = np.array([rho(t) for t in tau_grid])
    if vals.max() >= limit:
        return False
    i = int(vals.argmax())
    lo = tau_grid[max(i - 1, 0)]
    hi = tau_grid[min(i + 1, tau_grid.size - 1)]
    for tau in np.linspace(lo, hi, 21):
        if rho(tau) >= limit:
            return False
    return True


@dataclass(frozen=True)
class NyquistValue:
    """Supremum gain for which every smaller feedback gain keeps the loop stable."""

    value: float
    unbounded: bool = False

    def __float__(self) -> float:
        return self.value


def nyquist_value(G: RationalTransferFunction, tol: float = 1e-6,
                  cap: float = NYQUIST_CAP) -> NyquistValue:
    """Largest K such that the loop of G with every gain in [0, K] is stable.

    Bisection on K with an inner stability sweep over a 101-point tau grid
    (plus refinement); gains beyond ``cap`` are reported as unbounded.
    """
    if not G.is_stable():
        raise ValueError("Nyquist value requires an open-loop stable plant")
    if not G.is_proper:
        raise ValueError("Nyquist value requires a proper plant")
    ss = tf_to_ss(G)
    taus = np.linspace(0.0, 1.0, 101)
    if ss.order == 0 or _stable_for_all_gains(ss, cap, taus):
        return NyquistValue(math.inf, unbounded=True)
    hi = 1.0
    while hi < cap and _stable_for_all_gains(ss, hi, taus):
        hi *= 2.0
    hi = min(hi, cap)
    lo = hi / 2.0
    if not _stable_for_all_gains(ss, lo, taus):
        lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _stable_for_all_gains(ss, mid, taus):
            lo = mid
        else:
            hi = mid
    return NyquistValue(lo)


def c2d_zoh(G: RationalTransferFunction, Ts: float) -> RationalTransferFunction:
    """Zero-order-hold discretization of a continuous-time transfer function."""
    if G.domain != CONTINUOUS:
        raise ValueError("c2d_zoh expects a continuous-time plant")
    if not G.is_proper:
        raise ValueError("c2d_zoh expects a proper plant")
    if Ts <= 0:
        raise ValueError(f"sampling time must be positive, got {Ts}")
    numd, dend, _ = cont2discrete((G.num, G.den), Ts, method="zoh")
    return RationalTransferFunction(np.atleast_1d(numd.ravel()), np.atleast_1d(dend.ravel()),
                                    DISCRETE)


def normalize_realization(ss: StateSpaceModel, grid_size: int = 512) -> StateSpaceModel:
    """Equalize per-state resonance peaks of a stable realization.

    Real-Schur coordinates followed by diagonal scaling so each state's
    frequency response to the input peaks near 1.  Leaves the transfer
    function untouched; dramatically improves LMI conditioning for plants
    with poles close to the stability boundary.
    """
    n = ss.order
    if n == 0:
        return ss
    _, Z = schur(ss.A, output="real")
    Am, Bm, Cm = Z.T @ ss.A @ Z, Z.T @ ss.B, ss.C @ Z
    if ss.domain == DISCRETE:
        pts = np.exp(1j * np.linspace(0.0, np.pi, grid_size))
    else:
        pmax = max(1.0, np.abs(np.linalg.eigvals(Am)).max())
        pts = 1j * np.concatenate([[0.0], np.geomspace(1e-3 * pmax, 1e3 * pmax, grid_size - 1)])
    I = np.eye(n)
    peaks = np.zeros(n)
    for p in pts:
        x = np.linalg.solve(p * I - Am, Bm).ravel()
        peaks = np.maximum(peaks, np.abs(x))
    s = np.clip(peaks, 1e-8, 1e12)
    return StateSpaceModel(Am / s[:, None] * s[None, :], Bm / s[:, None],
                           Cm * s[None, :], ss.D, ss.domain)


@dataclass(frozen=True)
class PlantRegistry:
    """Named benchmark plants loaded from the packaged JSON registry."""

    plants: dict = field(default_factory=dict)

    def __getitem__(self, plant_id: str) -> RationalTransferFunction:
        try:
            return self.plants[plant_id]
        except KeyError:
            raise KeyError(
                f"unknown plant {plant_id!r}; available: {', '.join(sorted(self.plants))}"
            ) from None

    def __contains__(self, plant_id: str) -> bool:
        return plant_id in self.plants

    def ids(self):
        return sorted(self.plants)


def load_registry(path=None) -> PlantRegistry:
    """Load the plant registry (packaged file by default)."""
    if path is None:
        text = resources.files("zfsearch").joinpath("plants.json").read_text()
    else:
        with open(path) as f:
            text = f.read()
    entries = json.loads(text)
    plants = {
        e["id"]: RationalTransferFunction(e["num"], e["den"], e["domain"]) for e in entries
    }
    return PlantRegistry(plants)


def check_search_plant(G: RationalTransferFunction) -> None:
    """Common preconditions for plants handed to the multiplier searches."""
    if G.domain != DISCRETE:
        raise ValueError("multiplier searches operate on discrete-time plants")
    if not G.is_proper:
        raise ValueError("plant must be proper")
    if G.boundary_distance() < BOUNDARY_TOL:
        raise ValueError("plant has a pole on (or too close to) the unit circle")
    if not G.is_stable():
        raise ValueError("plant must be open-loop stable")
