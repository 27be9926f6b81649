import math

import numpy as np
import pytest

from zfsearch.analysis import (SlopeResult, circle_criterion, consistency_check,
                               max_slope, significant_taps, verify_fdi)
from zfsearch.fir import FirMultiplier, identity_multiplier
from zfsearch.lti import RationalTransferFunction, load_registry


@pytest.fixture(scope="module")
def registry():
    return load_registry()


class TestVerifyFdi:
    def test_identity_on_zero_plant(self):
        G = RationalTransferFunction([0.0], [1.0])
        assert verify_fdi(None, G, 5.0) == pytest.approx(1.0)
        assert verify_fdi(identity_multiplier(), G, 5.0) == pytest.approx(1.0)

    def test_circle_boundary_margin_vanishes(self, registry):
        margin = verify_fdi(identity_multiplier(), registry["ex1"], 0.7934)
        assert abs(margin) < 1e-3

    def test_search_certificate_is_positive(self, registry):
        from zfsearch.hardfact import solve_hard

        r = solve_hard(registry["ex1"], 12.9, 1, 1, odd=False)
        assert verify_fdi(r.multiplier, registry["ex1"], 12.9) > 0.0

    def test_minimum_grid_size(self, registry):
        with pytest.raises(ValueError, match="512"):
            verify_fdi(None, registry["ex1"], 1.0, grid_size=100)

    def test_pole_on_circle_raises(self):
        G = RationalTransferFunction([1.0], [1.0, -1.0])
        with pytest.raises(ValueError, match="pole"):
            verify_fdi(None, G, 0.5)

    def test_refinement_catches_narrow_notch(self):
        # lightly damped pole pair carves a notch far narrower than the grid step
        r, th = 0.999995, 1.0
        den = np.real(np.poly([r * np.exp(1j * th), r * np.exp(-1j * th)]))
        G = RationalTransferFunction([1e-4, 0.0], den)
        coarse_grid_min = verify_fdi(None, G, 1.0, grid_size=512)
        w_fine = np.linspace(th - 1e-4, th + 1e-4, 20001)
        true_min = (1.0 + G(np.exp(1j * w_fine))).real.min()
        assert coarse_grid_min <= true_min + 1e-6


class TestCircleCriterion:
    def test_table_values(self, registry):
        for pid, expected in (("ex1", 0.7934), ("ex2", 0.1984), ("ex4", 1.5312)):
            assert circle_criterion(registry[pid]).k_max == pytest.approx(expected,
                                                                          abs=1e-3)

    def test_zero_plant_capped(self):
        res = circle_criterion(RationalTransferFunction([0.0], [1.0]))
        assert res.capped_by_nyquist and math.isinf(res.k_max)


class TestMaxSlope:
    def test_fir_hard_ex5(self, registry):
        r = max_slope(registry["ex5"], "fir_hard", n_f=1, n_b=1, odd=False)
        assert r.k_max == pytest.approx(2.4475, abs=2e-4)
        consistency_check(r, False)

    def test_circle_method(self, registry):
        r = max_slope(registry["ex1"], "circle")
        assert r.k_max == pytest.approx(0.7934, abs=1e-3)
        assert r.verification_margin > 0.0

    def test_result_invariants(self, registry):
        r = max_slope(registry["ex6"], "fir_hard", n_f=1, n_b=1, odd=True, tol=1e-4)
        assert 0.0 < r.k_max <= r.nyquist_value * (1.0 + 1e-6)
        assert r.verification_margin > 0.0
        assert isinstance(r.multiplier, FirMultiplier)
        payload = r.to_json()
        assert payload["k_max"] == r.k_max
        assert payload["multiplier"]["coeffs"][1] == 1.0

    def test_cross_method_ordering(self, registry):
        G = registry["ex6"]
        circle = max_slope(G, "circle").k_max
        fir1 = max_slope(G, "fir_hard", n_f=1, n_b=1, odd=False, tol=1e-4).k_max
        fir2 = max_slope(G, "fir_hard", n_f=2, n_b=2, odd=False, tol=1e-4).k_max
        kn = max_slope(G, "circle").nyquist_value
        tol = 1e-4
        assert circle <= fir1 + tol
        assert fir1 <= fir2 + tol
        assert fir2 <= kn + tol

    def test_unknown_method(self, registry):
        with pytest.raises(ValueError, match="unknown method"):
            max_slope(registry["ex1"], "magic")

    def test_lifting_requires_symmetric_orders(self, registry):
        with pytest.raises(ValueError, match="n_f = n_b"):
            max_slope(registry["ex1"], "fir_lifting", n_f=1, n_b=2)

    def test_iir_requires_odd(self, registry):
        with pytest.raises(ValueError, match="odd"):
            max_slope(registry["ex1"], "iir_causal", odd=False)


def test_significant_taps():
    m = FirMultiplier(2, 2, np.array([-0.3, 1e-7, 1.0, 0.0, -0.2]))
    assert significant_taps(m) == [-2, 0, 2]


def test_consistency_check_rejects_bad_result():
    bad = SlopeResult("fir_hard", False, 1, 1, 1.0, None, -1.0, 2.0, 0.0)
    with pytest.raises(AssertionError, match="margin"):
        consistency_check(bad, False)
