import numpy as np
import pytest

from zfsearch import sdp


def lyapunov_problem(A):
    """X >= eps*I and A'XA - X <= -eps*I: a certificate exists iff A is stable."""
    d = A.shape[0]
    p = sdp.LmiProblem()
    X = p.add_variable(sdp.SymmetricVar("X", d))
    decay = sdp.AffineExpr.term(A.T, X, A) - sdp.AffineExpr.term(np.eye(d), X, np.eye(d))
    p.add_matrix_constraint(decay, name="decay")
    p.add_matrix_constraint(sdp.AffineExpr.term(-np.eye(d), X, np.eye(d)), name="X pd")
    return p


class TestSolveFeasibility:
    def test_trivial_scalar(self):
        p = sdp.LmiProblem()
        p.add_variable(sdp.ScalarVar("x"))
        p.add_matrix_constraint(sdp.AffineExpr.scalar_term(sdp.ScalarVar("x"), [[1.0]]),
                                eps=1e-6)
        sol = sdp.solve_feasibility(p)
        assert sol.feasible
        assert sol.values["x"] <= -1e-6 + sdp.RECHECK_TOL

    def test_lyapunov_feasible(self):
        sol = sdp.solve_feasibility(lyapunov_problem(np.diag([0.5, 0.5])))
        assert sol.feasible
        X = sol.values["X"]
        assert np.linalg.eigvalsh(X).min() > 0.0

    def test_lyapunov_infeasible_for_unstable(self):
        sol = sdp.solve_feasibility(lyapunov_problem(np.diag([2.0, 0.5])))
        assert sol.status == sdp.INFEASIBLE

    def test_contradictory_linear_constraints(self):
        p = sdp.LmiProblem()
        p.add_variable(sdp.ScalarVar("x"))
        p.add_matrix_constraint(sdp.AffineExpr.scalar_term(sdp.ScalarVar("x"), [[1.0]]),
                                eps=0.0)
        p.add_linear_constraint([(1.0, "x")], "<=", -1.0)
        p.add_linear_constraint([(1.0, "x")], ">=", 1.0)
        sol = sdp.solve_feasibility(p)
        assert sol.status == sdp.INFEASIBLE

    def test_feasible_solutions_pass_substitution_recheck(self):
        p = lyapunov_problem(np.array([[0.9, 0.3], [0.0, -0.2]]))
        sol = sdp.solve_feasibility(p)
        assert sol.feasible
        for mc in p.matrix_constraints:
            M = mc.expr.value(sol.values)
            assert np.linalg.eigvalsh(M).max() < 0.0
        assert sol.max_constraint_violation <= sdp.RECHECK_TOL


class TestAffineExpr:
    def test_block_and_value(self):
        p = sdp.LmiProblem()
        S = p.add_variable(sdp.SymmetricVar("S", 2))
        A = np.array([[0.5, 1.0], [0.0, 0.3]])
        expr = sdp.block([
            [sdp.AffineExpr.term(-np.eye(2), S, np.eye(2)), sdp.AffineExpr.term(np.eye(2), S, A)],
            [sdp.AffineExpr.term(A.T, S, np.eye(2)), sdp.AffineExpr.term(-np.eye(2), S, np.eye(2))],
        ])
        Sv = np.array([[2.0, 0.5], [0.5, 1.0]])
        expected = np.block([[-Sv, Sv @ A], [A.T @ Sv, -Sv]])
        np.testing.assert_allclose(expr.value({"S": Sv}), expected)

    def test_transpose_of_general_var(self):
        p = sdp.LmiProblem()
        Bh = p.add_variable(sdp.GeneralVar("Bh", 2, 1))
        expr = sdp.AffineExpr.term(np.eye(2), Bh, np.eye(1)).T
        val = expr.value({"Bh": np.array([[3.0], [4.0]])})
        np.testing.assert_allclose(val, [[3.0, 4.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            sdp.AffineExpr.zeros(2, 2) + sdp.AffineExpr.zeros(3, 3)

    def test_duplicate_variable_rejected(self):
        p = sdp.LmiProblem()
        p.add_variable(sdp.ScalarVar("x"))
        with pytest.raises(ValueError, match="duplicate"):
            p.add_variable(sdp.ScalarVar("x"))


def test_default_strictness_scales_with_dimension():
    assert sdp.default_strictness(10) == pytest.approx(1e-6)


def test_problem_dump(tmp_path):
    p = lyapunov_problem(np.diag([0.5, 0.4]))
    p.add_variable(sdp.ScalarVar("t"))
    p.add_linear_constraint([(1.0, "t")], "<=", 100.0, name="bound")
    path = tmp_path / "dump.txt"
    sdp.dump_problem(p, path)
    text = path.read_text()
    assert "matrix_constraint 0" in text
    assert "X[0,0]" in text
    assert "linear_constraint" in text
