import numpy as np
import pytest

from zfsearch.analysis import verify_fdi
from zfsearch.iir import (ANTICAUSAL, CAUSAL, IirMultiplier, IirSearchConfig,
                          anticausal_search, causal_search, default_lambda_grid,
                          lemma2_check, recover_multiplier, transformed_plant)
from zfsearch.lti import load_registry

FAST = IirSearchConfig(np.array([0.01, 0.05, 0.2, 0.5, 0.8, 0.95]))


@pytest.fixture(scope="module")
def registry():
    return load_registry()


class TestRecovery:
    def test_zero_data_gives_identity_multiplier(self):
        A_u, B_u, C_u = recover_multiplier(np.eye(2), 3.0 * np.eye(2),
                                           np.zeros((2, 2)), np.zeros((2, 1)),
                                           np.array([[0.4, -0.1]]))
        np.testing.assert_allclose(A_u, 0.0)
        np.testing.assert_allclose(B_u, 0.0)
        m = IirMultiplier(CAUSAL, A_u, B_u, C_u)
        np.testing.assert_allclose(m.response(np.linspace(0, 3, 5)), 1.0)

    def test_scalar_case(self):
        A_u, _, _ = recover_multiplier(np.eye(1), 3.0 * np.eye(1),
                                       np.array([[-1.0]]), np.zeros((1, 1)),
                                       np.zeros((1, 1)))
        assert A_u[0, 0] == pytest.approx(0.5)

    def test_c_passthrough(self):
        C = np.array([[1.0, 2.0, 3.0]])
        _, _, C_u = recover_multiplier(np.eye(3), 2.0 * np.eye(3), np.zeros((3, 3)),
                                       np.zeros((3, 1)), C)
        np.testing.assert_allclose(C_u, C)

    def test_singular_difference_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            recover_multiplier(np.eye(2), np.eye(2), np.eye(2), np.ones((2, 1)),
                               np.ones((1, 2)))


class TestConfig:
    def test_default_grid(self):
        g = default_lambda_grid()
        assert g.size == 30
        assert g[0] == pytest.approx(0.01) and g[-1] == pytest.approx(0.99)

    def test_grid_bounds_enforced(self):
        with pytest.raises(ValueError, match="inside"):
            IirSearchConfig(np.array([0.0, 0.5]))


class TestTransformedPlant:
    def test_causal_is_one_plus_kg(self, registry):
        G = registry["ex1"]
        k = 3.0
        P = transformed_plant(G, k, CAUSAL)
        z = np.exp(1j * np.linspace(0.1, 3.0, 7))
        np.testing.assert_allclose(P.response(z), 1.0 + k * G(z), atol=1e-10)

    def test_anticausal_is_inverse_loop(self, registry):
        G = registry["ex5"]
        k = 1.5
        P = transformed_plant(G, k, ANTICAUSAL)
        z = np.exp(1j * np.linspace(0.1, 3.0, 7))
        np.testing.assert_allclose(P.response(z), 1.0 / (1.0 + k * G(z)), atol=1e-10)


class TestMultiplier:
    def test_l1_bound_on_known_system(self):
        m = IirMultiplier(CAUSAL, np.array([[0.5]]), np.array([[1.0]]),
                          np.array([[0.3]]))
        # taps 0.3 * 0.5^j sum to 0.6
        assert m.l1_bound() == pytest.approx(0.6, abs=1e-8)

    def test_impulse_taps(self):
        m = IirMultiplier(CAUSAL, np.array([[0.5]]), np.array([[1.0]]),
                          np.array([[0.3]]))
        np.testing.assert_allclose(m.impulse_taps(3), [0.3, 0.15, 0.075])

    def test_anticausal_forward_realization_matches(self):
        m = IirMultiplier(ANTICAUSAL, np.array([[0.4]]), np.array([[1.0]]),
                          np.array([[0.5]]))
        fwd = m.forward_realization()
        w = np.linspace(0.0, np.pi, 17)
        np.testing.assert_allclose(fwd.response(np.exp(1j * w)), m.response(w),
                                   atol=1e-10)


class TestSearches:
    def test_causal_ex1_at_table_value(self, registry):
        r = causal_search(registry["ex1"], 12.4)
        assert r is not None
        assert r.fdi_margin > 0.0
        assert r.l1_bound < 1.0 + 1e-6
        assert r.multiplier.spectral_radius() < 1.0

    def test_causal_ex1_beyond_method_limit(self, registry):
        assert causal_search(registry["ex1"], 12.5) is None

    def test_causal_ex5(self, registry):
        assert causal_search(registry["ex5"], 2.33, FAST) is not None

    def test_anticausal_ex5(self, registry):
        r = anticausal_search(registry["ex5"], 2.43, FAST)
        assert r is not None
        assert r.multiplier.direction == ANTICAUSAL

    def test_anticausal_ex1_limit(self, registry):
        assert anticausal_search(registry["ex1"], 1.45, FAST) is not None
        assert anticausal_search(registry["ex1"], 1.6, FAST) is None

    def test_lemma2_certificate_recheck(self, registry):
        r = causal_search(registry["ex1"], 10.0, FAST)
        assert r is not None
        sol = r.solution.values
        U = sol["P11"] - sol["S11"]
        A_u, B_u, C_u = recover_multiplier(sol["S11"], sol["P11"], sol["A_hat"],
                                           sol["B_hat"], sol["C_hat"])
        assert lemma2_check(A_u, B_u, C_u, U, r.lam, r.mu)

    def test_verifier_agrees_with_stored_margin(self, registry):
        G = registry["ex6"]
        r = anticausal_search(G, 1.0, FAST)
        assert r is not None
        again = verify_fdi(r.multiplier, G, 1.0)
        assert again == pytest.approx(r.fdi_margin, rel=1e-6, abs=1e-12)

    def test_rejects_nonpositive_slope(self, registry):
        with pytest.raises(ValueError, match="positive"):
            causal_search(registry["ex1"], 0.0)
