"""FIR multipliers M(z) = sum_i m_i z^{-i}, i = -n_f..n_b, with m_0 = 1.

The center tap is structurally fixed to 1; anticausal taps (negative i)
come first in the coefficient vector.  Class membership (the l1 condition
and the sign conditions for non-odd nonlinearities) is checked by
``check_zf_class``, not enforced at construction, so rejected candidates
can still be represented and reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Strict inequalities of the multiplier class are verified with this margin.
CLASS_MARGIN = 1e-9


@dataclass(frozen=True)
class FirMultiplier:
    """Finitely supported multiplier; coeffs run m_{-n_f}, ..., m_0, ..., m_{n_b}."""

    n_f: int
    n_b: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.n_f < 0 or self.n_b < 0:
            raise ValueError("tap counts must be nonnegative")
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size != self.n_f + self.n_b + 1:
            raise ValueError(f"expected {self.n_f + self.n_b + 1} coefficients, got {c.size}")
        if c[self.n_f] != 1.0:
            raise ValueError("center tap m_0 must equal 1 exactly")
        object.__setattr__(self, "coeffs", c)

    def tap(self, i: int) -> float:
        if not -self.n_f <= i <= self.n_b:
            return 0.0
        return float(self.coeffs[i + self.n_f])

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_f, self.n_b + 1)

    def response(self, omegas) -> np.ndarray:
        """M(e^{jw}) on a frequency grid."""
        return evaluate(self, omegas)

    def reversed(self) -> "FirMultiplier":
        """Time-reversed multiplier, taps m_i -> m_{-i}."""
        return FirMultiplier(self.n_b, self.n_f, self.coeffs[::-1].copy())

    def to_json(self) -> dict:
        return {"n_f": self.n_f, "n_b": self.n_b, "coeffs": self.coeffs.tolist()}

    @staticmethod
    def from_json(data: dict) -> "FirMultiplier":
        return FirMultiplier(int(data["n_f"]), int(data["n_b"]), np.asarray(data["coeffs"]))


def identity_multiplier() -> FirMultiplier:
    return FirMultiplier(0, 0, np.ones(1))


def l1_norm(m: FirMultiplier) -> float:
    return float(np.abs(m.coeffs).sum())


def evaluate(m: FirMultiplier, omegas) -> np.ndarray:
    """M(e^{jw}) = sum_i m_i e^{-j i w}."""
    w = np.asarray(omegas, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(w, m.indices.astype(float)))
    out = phases @ m.coeffs
    return out if np.ndim(omegas) else complex(out)


def check_zf_class(m: FirMultiplier, odd_nonlinearity: bool) -> tuple[bool, str]:
    """Multiplier-class verdict.

    Non-odd nonlinearities require every off-center tap nonpositive and a
    strictly positive tap sum; odd nonlinearities only need the l1 norm
    below 2.  Strict inequalities are enforced with a small margin.
    """
    if odd_nonlinearity:
        l1 = l1_norm(m)
        if l1 >= 2.0 - CLASS_MARGIN:
            return False, f"l1 norm {l1:.6g} is not below 2"
        return True, "ok"
    off = np.delete(m.coeffs, m.n_f)
    if off.size and off.max() > CLASS_MARGIN:
        i = m.indices[np.delete(np.arange(m.coeffs.size), m.n_f)[off.argmax()]]
        return False, f"positive off-center tap m_{i} = {off.max():.6g}"
    s = float(m.coeffs.sum())
    if s < CLASS_MARGIN:
        return False, f"tap sum {s:.6g} is not positive"
    return True, "ok"


def jordan_decompose(m: FirMultiplier) -> tuple[np.ndarray, np.ndarray]:
    """Split m = m+ - m- into nonnegative parts (m0+ = 1, m0- = 0)."""
    plus = np.maximum(m.coeffs, 0.0)
    minus = np.maximum(-m.coeffs, 0.0)
    return plus, minus
