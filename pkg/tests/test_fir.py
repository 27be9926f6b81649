import numpy as np
import pytest

from zfsearch.fir import (FirMultiplier, check_zf_class, evaluate, identity_multiplier,
                          jordan_decompose, l1_norm)


def fm(n_f, n_b, coeffs):
    return FirMultiplier(n_f, n_b, np.asarray(coeffs, dtype=float))


class TestConstruction:
    def test_center_tap_must_be_one(self):
        with pytest.raises(ValueError, match="m_0"):
            fm(1, 1, [-0.5, 0.9, -0.5])

    def test_length_checked(self):
        with pytest.raises(ValueError, match="coefficients"):
            fm(1, 1, [1.0, -0.5])

    def test_tap_lookup(self):
        m = fm(1, 2, [-0.3, 1.0, -0.2, -0.1])
        assert m.tap(-1) == -0.3
        assert m.tap(0) == 1.0
        assert m.tap(2) == -0.1
        assert m.tap(5) == 0.0

    def test_json_roundtrip(self):
        m = fm(2, 1, [-0.1, 0.0, 1.0, -0.4])
        again = FirMultiplier.from_json(m.to_json())
        assert again.n_f == 2 and again.n_b == 1
        np.testing.assert_allclose(again.coeffs, m.coeffs)


class TestL1Norm:
    def test_identity(self):
        assert l1_norm(identity_multiplier()) == 1.0

    def test_bridge_example_one(self):
        assert l1_norm(fm(1, 1, [-0.5436, 1.0, -0.4561])) == pytest.approx(1.9997)

    def test_bridge_example_two(self):
        assert l1_norm(fm(0, 1, [1.0, -0.9551])) == pytest.approx(1.9551)


class TestClassCheck:
    def test_all_negative_taps_pass_nonodd(self):
        ok, reason = check_zf_class(fm(1, 1, [-0.5436, 1.0, -0.4561]), False)
        assert ok, reason

    def test_l1_violation_fails_odd(self):
        ok, reason = check_zf_class(fm(0, 1, [1.0, -1.5]), True)
        assert not ok and "l1" in reason

    def test_positive_tap_fails_nonodd_passes_odd(self):
        m = fm(1, 1, [0.2, 1.0, -0.3])
        ok, reason = check_zf_class(m, False)
        assert not ok and "positive off-center" in reason
        ok, _ = check_zf_class(m, True)
        assert ok

    def test_zero_sum_fails_nonodd(self):
        ok, reason = check_zf_class(fm(1, 1, [-0.5, 1.0, -0.5]), False)
        assert not ok and "sum" in reason

    def test_nonodd_class_contained_in_odd_class(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n_f, n_b = int(rng.integers(0, 4)), int(rng.integers(0, 4))
            coeffs = np.zeros(n_f + n_b + 1)
            coeffs[n_f] = 1.0
            off = -rng.uniform(0.0, 1.0, n_f + n_b)
            if off.size and -off.sum() >= 1.0:
                off *= 0.99 / -off.sum()
            coeffs[np.arange(coeffs.size) != n_f] = off
            m = FirMultiplier(n_f, n_b, coeffs)
            if check_zf_class(m, False)[0]:
                assert check_zf_class(m, True)[0]


class TestJordanDecomposition:
    def test_signs(self):
        m = fm(1, 1, [-0.1, 1.0, 0.4])
        plus, minus = jordan_decompose(m)
        np.testing.assert_allclose(plus, [0.0, 1.0, 0.4])
        np.testing.assert_allclose(minus, [0.1, 0.0, 0.0])

    def test_reconstruction_and_complementarity(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            coeffs = rng.uniform(-1.0, 1.0, 7)
            coeffs[3] = 1.0
            m = fm(3, 3, coeffs)
            plus, minus = jordan_decompose(m)
            np.testing.assert_allclose(plus - minus, m.coeffs)
            np.testing.assert_allclose(plus * minus, 0.0)
            assert plus[3] == 1.0 and minus[3] == 0.0


class TestEvaluate:
    def test_identity(self):
        for w in (0.0, 0.7, np.pi):
            assert evaluate(identity_multiplier(), w) == pytest.approx(1.0)

    def test_two_tap_at_pi(self):
        m = fm(0, 1, [1.0, -1.0])
        assert evaluate(m, np.pi) == pytest.approx(2.0)

    def test_symmetric_triple(self):
        m = fm(1, 1, [-0.5, 1.0, -0.5])
        assert evaluate(m, 0.0) == pytest.approx(0.0)
        assert evaluate(m, np.pi) == pytest.approx(2.0)

    def test_conjugate_symmetry(self):
        m = fm(2, 1, [-0.2, 0.1, 1.0, -0.4])
        w = np.linspace(0.1, 3.0, 7)
        np.testing.assert_allclose(evaluate(m, -w), np.conj(evaluate(m, w)), atol=1e-14)

    def test_matches_response_method(self):
        m = fm(1, 2, [-0.3, 1.0, -0.2, -0.1])
        w = np.linspace(0.0, np.pi, 9)
        np.testing.assert_allclose(m.response(w), evaluate(m, w))


def test_reversed():
    m = fm(2, 1, [-0.2, 0.1, 1.0, -0.4])
    r = m.reversed()
    assert (r.n_f, r.n_b) == (1, 2)
    for i in range(-2, 2):
        assert r.tap(i) == m.tap(-i)
