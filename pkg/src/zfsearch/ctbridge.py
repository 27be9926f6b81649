"""Continuous-time certification through the discrete FIR search.

A continuous plant is discretized (ZOH), the FIR search runs on the
discrete plant, and the resulting taps are re-interpreted as a delay-form
multiplier M(s) = sum_i m_i e^{-i Ts s}, which stays in the multiplier
class.  The continuous slope is then certified by a frequency sweep alone.

Sweep grids are log-spaced with extra clusters anchored at the imaginary
parts of plant poles and zeros: lightly damped plants carve notches far
narrower than any uniform grid step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .analysis import SlopeResult, max_slope
from .fir import FirMultiplier
from .lti import CONTINUOUS, RationalTransferFunction, c2d_zoh, nyquist_value

PRUNE_DEFAULT = 1e-3

CT_SLOPE_CAP = 1.0e7

# Strict class inequalities checked with this margin.
CLASS_MARGIN = 1e-9


@dataclass(frozen=True)
class DelayMultiplier:
    """M(s) = sum over terms (i, m_i) of m_i e^{-i Ts s}; center term (0, 1)."""

    Ts: float
    terms: tuple

    def __post_init__(self):
        if self.Ts <= 0:
            raise ValueError("sampling time must be positive")
        terms = tuple((int(i), float(c)) for i, c in self.terms)
        if (0, 1.0) not in terms:
            raise ValueError("delay multiplier needs a unit center term at delay 0")
        object.__setattr__(self, "terms", terms)

    def off_center_l1(self) -> float:
        return sum(abs(c) for i, c in self.terms if i != 0)

    def in_class(self) -> bool:
        return self.off_center_l1() < 1.0 - CLASS_MARGIN

    def response(self, omegas) -> np.ndarray:
        """M(jw) = sum m_i e^{-j i Ts w}."""
        w = np.asarray(omegas, dtype=float)
        out = np.zeros(w.shape, dtype=complex)
        for i, c in self.terms:
            out += c * np.exp(-1j * i * self.Ts * w)
        return out

    def to_json(self) -> dict:
        return {"Ts": self.Ts, "terms": [{"i": i, "coeff": c} for i, c in self.terms]}

    @staticmethod
    def from_json(data: dict) -> "DelayMultiplier":
        return DelayMultiplier(float(data["Ts"]),
                               tuple((t["i"], t["coeff"]) for t in data["terms"]))


def from_fir(m: FirMultiplier, Ts: float, eps_prune: float = PRUNE_DEFAULT) -> DelayMultiplier:
    """Re-interpret FIR taps as delays of i*Ts seconds, dropping tiny taps.

    Pruning only removes mass, so the l1 condition survives it.
    """
    terms = [(int(i), float(c)) for i, c in zip(m.indices, m.coeffs)
             if i == 0 or abs(c) >= eps_prune]
    return DelayMultiplier(Ts, tuple(terms))


def sweep_grid(G_s: RationalTransferFunction, Ts: float, grid_size: int = 8192,
               w_min: float = 1e-3) -> np.ndarray:
    """Log-spaced positive frequencies up to 100x the fastest plant/sampling
    scale, with clusters around every lightly damped pole or zero."""
    scales = [1.0, 1.0 / Ts]
    for r in (G_s.poles(), G_s.zeros()):
        if r.size:
            scales.append(float(np.abs(r).max()))
    w_max = 100.0 * max(scales)
    w = np.geomspace(w_min, w_max, grid_size)
    clusters = [w]
    for r in np.concatenate([G_s.poles(), G_s.zeros()]):
        w0, width = abs(r.imag), max(abs(r.real), 1e-9 * max(1.0, abs(r.imag)))
        if w0 > 0:
            clusters.append(w0 + width * np.linspace(-30.0, 30.0, 241))
    allw = np.unique(np.concatenate(clusters))
    return allw[allw > 0.0]


def ct_margin(M: DelayMultiplier, G_s: RationalTransferFunction, K: float,
              w: np.ndarray) -> float:
    """min over the sweep grid (with local refinement) of Re{M (1 + K G)}(jw)."""
    def values(ws):
        return (M.response(ws) * (1.0 + K * G_s(1j * ws))).real

    vals = values(w)
    best = float(vals.min())
    i = int(vals.argmin())
    lo, hi = w[max(i - 1, 0)], w[min(i + 1, w.size - 1)]
    for _ in range(3):
        ws = np.linspace(lo, hi, 65)
        vals = values(ws)
        j = int(vals.argmin())
        best = min(best, float(vals.min()))
        lo, hi = ws[max(j - 1, 0)], ws[min(j + 1, 64)]
    return best


@dataclass(frozen=True)
class CtSlopeResult:
    k_max: float
    margin: float
    capped_by_nyquist: bool
    nyquist_value: float
    wall_time: float


def ct_max_slope(M: DelayMultiplier, G_s: RationalTransferFunction,
                 grid_size: int = 8192, tol: float = 1e-5) -> CtSlopeResult:
    """Largest K with Re{M(s)(1 + K G(s))} > 0 on the imaginary axis.

    The margin is affine in K pointwise, so feasibility is an interval and
    bisection applies; a sweep that never fails up to the cap reports the
    continuous Nyquist value instead.
    """
    t0 = time.perf_counter()
    if G_s.domain != CONTINUOUS:
        raise ValueError("ct_max_slope expects a continuous-time plant")
    if not M.in_class():
        raise ValueError(f"multiplier violates the class bound: off-center l1 = "
                         f"{M.off_center_l1():.6g}")
    kn = nyquist_value(G_s)
    w = sweep_grid(G_s, M.Ts, grid_size)

    def feasible(K):
        return ct_margin(M, G_s, K, w) > 0.0

    hi = 1.0
    while hi < CT_SLOPE_CAP and feasible(hi):
        hi *= 2.0
    if hi >= CT_SLOPE_CAP:
        return CtSlopeResult(kn.value, math.inf, True, kn.value,
                             time.perf_counter() - t0)
    lo = hi / 2.0 if hi > 1.0 else 0.0
    if lo > 0.0 and not feasible(lo):
        lo = 0.0
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    margin = ct_margin(M, G_s, lo, w) if lo > 0 else math.nan
    value = min(lo, kn.value) if math.isfinite(kn.value) else lo
    return CtSlopeResult(value, margin, False, kn.value, time.perf_counter() - t0)


@dataclass(frozen=True)
class BridgeResult:
    multiplier: DelayMultiplier
    discrete: SlopeResult
    ct: CtSlopeResult


def derive_ct_multiplier(G_s: RationalTransferFunction, Ts: float, n_f: int, n_b: int,
                         odd: bool, eps_prune: float = PRUNE_DEFAULT,
                         tol: float = 1e-4, grid_size: int = 2048) -> DelayMultiplier:
    """Discretize, run the hard FIR search, prune, and lift taps to delays."""
    return _bridge(G_s, Ts, n_f, n_b, odd, eps_prune, tol, grid_size).multiplier


def bridge_search(G_s: RationalTransferFunction, Ts: float, n_f: int, n_b: int,
                  odd: bool, eps_prune: float = PRUNE_DEFAULT, tol: float = 1e-4,
                  grid_size: int = 2048, ct_grid: int = 8192) -> BridgeResult:
    """Full pipeline: derivation plus the continuous slope certification."""
    partial = _bridge(G_s, Ts, n_f, n_b, odd, eps_prune, tol, grid_size)
    ct = ct_max_slope(partial.multiplier, G_s, ct_grid)
    return BridgeResult(partial.multiplier, partial.discrete, ct)


def _bridge(G_s, Ts, n_f, n_b, odd, eps_prune, tol, grid_size) -> BridgeResult:
    if G_s.domain != CONTINUOUS:
        raise ValueError("bridge expects a continuous-time plant")
    G_d = c2d_zoh(G_s, Ts)
    if not G_d.is_stable():
        raise ValueError(f"discretized plant unstable at Ts = {Ts}; reduce the step")
    result = max_slope(G_d, "fir_hard", n_f=n_f, n_b=n_b, odd=odd, tol=tol,
                       grid_size=grid_size)
    if result.k_max <= 0.0 or result.multiplier is None:
        raise ValueError("discrete search certified no positive slope; "
                         "try other tap counts or sampling time")
    return BridgeResult(from_fir(result.multiplier, Ts, eps_prune), result, None)


def phase_sweep(M: DelayMultiplier, G_s: RationalTransferFunction, K: float,
                grid_size: int = 8192) -> tuple:
    """(w, phase degrees) of M(jw)(1 + K G(jw)) for plot reproduction."""
    w = sweep_grid(G_s, M.Ts, grid_size)
    phase = np.degrees(np.angle(M.response(w) * (1.0 + K * G_s(1j * w))))
    return w, phase
