"""Outer slope search, independent frequency-domain verification and the
circle-criterion baseline.

The bisection treats each method's feasibility as monotone in the slope but
keeps the largest verified slope seen, so a numerically marginal LMI answer
near the boundary cannot poison the reported value.  Every certificate is
re-verified here by a direct frequency sweep that shares no machinery with
the LMI solvers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fir import FirMultiplier, check_zf_class, identity_multiplier
from .lti import NyquistValue, RationalTransferFunction, check_search_plant, \
    freq_response, nyquist_value

METHODS = ("fir_hard", "fir_lifting", "iir_causal", "iir_anticausal", "circle")

BISECTION_CAP = 1.1e6


@dataclass(frozen=True)
class SlopeResult:
    """Certified maximum slope with its multiplier and diagnostics."""

    method: str
    odd: bool
    n_f: int
    n_b: int
    k_max: float
    multiplier: object
    verification_margin: float
    nyquist_value: float
    wall_time: float
    details: dict = field(default_factory=dict)

    def multiplier_json(self):
        if self.multiplier is None:
            return None
        return self.multiplier.to_json()

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "odd": self.odd,
            "n_f": self.n_f,
            "n_b": self.n_b,
            "k_max": self.k_max,
            "verification_margin": self.verification_margin,
            "nyquist_value": self.nyquist_value,
            "wall_time": self.wall_time,
            "multiplier": self.multiplier_json(),
            "details": {k: v for k, v in self.details.items()
                        if isinstance(v, (int, float, str, bool))},
        }


def _resonance_clusters(G: RationalTransferFunction) -> np.ndarray:
    """Extra sweep frequencies around pole/zero angles; lightly damped roots
    carve notches far narrower than any uniform grid step."""
    extra = []
    for root in np.concatenate([G.poles(), G.zeros()]):
        angle = abs(np.angle(root))
        if 0.0 < angle <= np.pi:
            width = max(abs(1.0 - abs(root)), 1e-9)
            extra.append(angle + width * np.linspace(-30.0, 30.0, 241))
    if not extra:
        return np.zeros(0)
    pts = np.concatenate(extra)
    return pts[(pts > 0.0) & (pts < np.pi)]


def verify_fdi(M, G: RationalTransferFunction, k: float, grid_size: int = 2048) -> float:
    """min over the unit circle of Re{M (1 + k G)}, by direct evaluation.

    Independent of all LMI machinery.  The uniform sweep over [0, pi]
    (conjugate symmetry) is augmented with clusters at pole/zero angles and
    three levels of local refinement around the minimizer.
    """
    if grid_size < 512:
        raise ValueError("verification grid must have at least 512 points")

    def values(w):
        resp = 1.0 + k * freq_response(G, w)
        if M is not None:
            resp = M.response(w) * resp
        return resp.real

    w = np.unique(np.concatenate([np.linspace(0.0, np.pi, grid_size),
                                  _resonance_clusters(G)]))
    grid_size = w.size
    vals = values(w)
    best = float(vals.min())
    i = int(vals.argmin())
    lo, hi = w[max(i - 1, 0)], w[min(i + 1, grid_size - 1)]
    for _ in range(3):
        w = np.linspace(lo, hi, 65)
        vals = values(w)
        j = int(vals.argmin())
        best = min(best, float(vals.min()))
        lo, hi = w[max(j - 1, 0)], w[min(j + 1, 64)]
    return best


@dataclass(frozen=True)
class CircleResult:
    k_max: float
    capped_by_nyquist: bool


def circle_criterion(G: RationalTransferFunction, grid_size: int = 8192) -> CircleResult:
    """Largest slope certified by M = 1: -1/min Re G, or the Nyquist value
    when Re G never goes negative."""
    w = np.linspace(0.0, np.pi, grid_size)
    re = freq_response(G, w).real
    i = int(re.argmin())
    lo, hi = w[max(i - 1, 0)], w[min(i + 1, grid_size - 1)]
    m = float(re.min())
    for _ in range(3):
        w = np.linspace(lo, hi, 65)
        re = freq_response(G, w).real
        j = int(re.argmin())
        m = min(m, float(re.min()))
        lo, hi = w[max(j - 1, 0)], w[min(j + 1, 64)]
    if m < -1e-12:
        return CircleResult(-1.0 / m, False)
    return CircleResult(float(nyquist_value(G).value), True)


def _certificate_probe(G, method, n_f, n_b, odd, grid_size, lambda_grid):
    """Per-method feasibility closure returning (multiplier, margin, extras)."""
    if method == "fir_hard":
        from .hardfact import solve_hard

        def probe(k):
            r = solve_hard(G, k, n_f, n_b, odd, grid_size)
            if r is None:
                return None
            return r.multiplier, r.fdi_margin, {"lambda_min_X": float(np.linalg.eigvalsh(r.X).min())}
        return probe
    if method == "fir_lifting":
        from .lifting import solve_lifted

        if n_f != n_b:
            raise ValueError("lifting search uses n_f = n_b")

        def probe(k):
            r = solve_lifted(G, k, n_f, odd, grid_size)
            if r is None:
                return None
            return r.multiplier, r.fdi_margin, {}
        return probe
    if method in ("iir_causal", "iir_anticausal"):
        from .iir import IirSearchConfig, anticausal_search, causal_search

        if not odd:
            raise ValueError("IIR searches assume an odd nonlinearity")
        cfg = IirSearchConfig() if lambda_grid is None else IirSearchConfig(lambda_grid)
        cfg.grid_size = grid_size
        search = causal_search if method == "iir_causal" else anticausal_search
        state = {"last": None}

        def probe(k):
            grid = cfg.lambda_grid
            if state["last"] is not None:
                grid = np.concatenate([[state["last"]],
                                       grid[grid != state["last"]]])
            r = search(G, k, IirSearchConfig(grid, cfg.grid_size))
            if r is None:
                return None
            state["last"] = r.lam
            return r.multiplier, r.fdi_margin, {"lambda": r.lam, "mu": r.mu,
                                                "l1_bound": r.l1_bound}
        return probe
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def max_slope(G: RationalTransferFunction, method: str, *, n_f: int = 1, n_b: int = 1,
              odd: bool = False, tol: float = 1e-5, grid_size: int = 2048,
              lambda_grid=None) -> SlopeResult:
    """Bisection for the largest slope a method can certify.

    Starts from [0, 1.1 * Nyquist value]; when the Nyquist value is
    unbounded the upper end is found by doubling instead.  Returns the
    largest slope whose certificate passed independent verification.
    """
    t0 = time.perf_counter()
    check_search_plant(G)
    kn = nyquist_value(G)

    if method == "circle":
        circ = circle_criterion(G, max(grid_size, 8192))
        k = circ.k_max if circ.capped_by_nyquist else circ.k_max * (1.0 - 1e-9)
        m = identity_multiplier()
        margin = verify_fdi(m, G, k, grid_size) if math.isfinite(k) else 1.0
        return SlopeResult("circle", odd, 0, 0, k, m, margin, kn.value,
                           time.perf_counter() - t0,
                           {"capped_by_nyquist": circ.capped_by_nyquist})

    probe = _certificate_probe(G, method, n_f, n_b, odd, grid_size, lambda_grid)
    if kn.unbounded:
        hi = 1.0
        while hi < BISECTION_CAP and probe(hi) is not None:
            hi *= 2.0
        hi = min(hi, BISECTION_CAP)
    else:
        hi = 1.1 * kn.value
    lo = 0.0
    best = None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        cert = probe(mid)
        if cert is not None:
            lo = mid
            if best is None or mid > best[0]:
                best = (mid, cert)
        else:
            hi = mid
    if best is None:
        return SlopeResult(method, odd, n_f, n_b, 0.0, None, 0.0, kn.value,
                           time.perf_counter() - t0,
                           {"diagnostic": f"infeasible down to k = {hi:.3e}"})
    k_max, (m, margin, extras) = best
    return SlopeResult(method, odd, n_f, n_b, k_max, m, margin, kn.value,
                       time.perf_counter() - t0, extras)


def significant_taps(m: FirMultiplier, threshold: float = 1e-5) -> list:
    """Tap indices whose magnitude exceeds the threshold (sparsity pattern)."""
    return [int(i) for i, c in zip(m.indices, m.coeffs) if abs(c) > threshold]


def sweep_orders(G: RationalTransferFunction, method: str, odd: bool, n_max: int,
                 tol: float = 1e-5, grid_size: int = 2048) -> list:
    """Slope-vs-order sweep for n = 1..n_max; returns SlopeResults in order."""
    out = []
    for n in range(1, n_max + 1):
        out.append(max_slope(G, method, n_f=n, n_b=n, odd=odd, tol=tol,
                             grid_size=grid_size))
    return out


def consistency_check(result: SlopeResult, odd: bool) -> None:
    """End-to-end soundness gate used by the CLI before emitting a row."""
    if result.k_max > 0:
        if result.verification_margin <= 0.0:
            raise AssertionError("positive slope reported without a positive margin")
        if math.isfinite(result.nyquist_value) and \
                result.k_max > result.nyquist_value * (1.0 + 1e-6):
            raise AssertionError("slope exceeds the Nyquist value")
        if isinstance(result.multiplier, FirMultiplier):
            ok, why = check_zf_class(result.multiplier, odd)
            if not ok:
                raise AssertionError(f"reported multiplier fails class check: {why}")
