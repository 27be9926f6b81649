"""Convex searches for discrete-time Zames-Falb multipliers.

Certifies l2 stability of Lur'e feedback loops with slope-restricted
nonlinearities: FIR multiplier searches via two LMI factorizations, IIR
causal/anticausal searches, slope maximization by bisection, and a bridge
that turns discrete FIR multipliers into continuous-time delay multipliers.
"""

from .analysis import SlopeResult, circle_criterion, max_slope, verify_fdi
from .ctbridge import DelayMultiplier, bridge_search, ct_max_slope, derive_ct_multiplier
from .fir import FirMultiplier, check_zf_class, evaluate, jordan_decompose, l1_norm
from .hardfact import AugmentedRealization, assemble_hard_lmi, build_augmentation, solve_hard
from .iir import IirMultiplier, IirSearchConfig, anticausal_search, causal_search, \
    recover_multiplier
from .lifting import LiftedRealization, build_kappa, build_lifted, solve_lifted
from .lti import RationalTransferFunction, StateSpaceModel, c2d_zoh, freq_response, \
    load_registry, nyquist_value, tf_to_ss
from .sdp import LmiProblem, LmiSolution, solve_feasibility

__version__ = "0.1.0"

__all__ = [
    "AugmentedRealization",
    "DelayMultiplier",
    "FirMultiplier",
    "IirMultiplier",
    "IirSearchConfig",
    "LiftedRealization",
    "LmiProblem",
    "LmiSolution",
    "RationalTransferFunction",
    "SlopeResult",
    "StateSpaceModel",
    "anticausal_search",
    "assemble_hard_lmi",
    "bridge_search",
    "build_augmentation",
    "build_kappa",
    "build_lifted",
    "c2d_zoh",
    "causal_search",
    "check_zf_class",
    "circle_criterion",
    "ct_max_slope",
    "derive_ct_multiplier",
    "evaluate",
    "freq_response",
    "jordan_decompose",
    "l1_norm",
    "load_registry",
    "max_slope",
    "nyquist_value",
    "recover_multiplier",
    "solve_feasibility",
    "solve_hard",
    "solve_lifted",
    "tf_to_ss",
    "verify_fdi",
]
