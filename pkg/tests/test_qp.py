import numpy as np
import pytest

from calibsvm.qp import (
    EXPANSION_COEFFICIENT,
    MONOTONICITY_SLACK,
    NumericalError,
    QpProblem,
    SolverConfig,
    check_operator,
    estimate_spectral_norm,
    mprgp_solve,
    projected_gradient,
)

from oracles import active_set_qp_oracle, random_svm_dual_instance


def dense_problem(hessian, linear, lower, upper=None):
    hessian = np.asarray(hessian, dtype=float)
    return QpProblem(
        hessian_apply=lambda v: hessian @ v,
        linear_term=linear,
        lower_bound=lower,
        upper_bound=upper,
    )


def assert_monotone(trace):
    drops = np.diff(trace)
    slack = MONOTONICITY_SLACK * np.maximum(1.0, np.abs(trace[:-1]))
    assert np.all(drops <= slack), f"objective increased by {drops.max()}"


class TestSpectralNorm:
    def test_diagonal(self):
        d = np.array([1.0, 2.0, 5.0])
        est = estimate_spectral_norm(lambda v: d * v, 3)
        assert est == pytest.approx(5.0, abs=1e-3)

    def test_identity(self):
        est = estimate_spectral_norm(lambda v: v, 4)
        assert est == pytest.approx(1.0, abs=1e-12)

    def test_random_gram_matches_dense_eigensolver(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal((8, 8))
        gram = x.T @ x
        truth = float(np.linalg.eigvalsh(gram)[-1])
        est = estimate_spectral_norm(lambda v: gram @ v, 8)
        assert est == pytest.approx(truth, rel=1e-3)

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            estimate_spectral_norm(lambda v: v, 0)

    def test_nonfinite_operator_rejected(self):
        with pytest.raises(NumericalError):
            estimate_spectral_norm(lambda v: v * np.nan, 3)


class TestProjectedGradient:
    def test_interior_point_has_zero_chopped(self):
        p = dense_problem(np.eye(2) * 2.0, np.array([-1.0, -1.0]),
                          np.zeros(2), np.ones(2) * 10)
        free, chopped, norm = projected_gradient(p, np.array([0.2, 0.3]))
        assert np.array_equal(chopped, [0.0, 0.0])
        assert norm > 0

    def test_positive_gradient_at_lower_bound_contributes_nothing(self):
        # g = Ax + b = (1, ...) > 0 at x_0 = lower -> KKT-consistent there
        p = dense_problem(np.eye(2), np.array([1.0, -1.0]), np.zeros(2))
        free, chopped, _ = projected_gradient(p, np.array([0.0, 0.5]))
        assert free[0] == 0.0 and chopped[0] == 0.0

    def test_zero_exactly_at_oracle_solution(self):
        rng = np.random.default_rng(7)
        inst = random_svm_dual_instance(rng, m=4, loss="l1", c=1.0)
        x_star = active_set_qp_oracle(
            inst["hessian"], inst["linear"], inst["lower"], inst["upper"]
        )
        p = dense_problem(inst["hessian"], inst["linear"], inst["lower"], inst["upper"])
        _, _, norm = projected_gradient(p, x_star)
        assert norm == pytest.approx(0.0, abs=1e-8)

    def test_infeasible_point_rejected(self):
        p = dense_problem(np.eye(1), np.array([0.0]), np.zeros(1), np.ones(1))
        with pytest.raises(ValueError):
            projected_gradient(p, np.array([2.0]))


class TestMprgpBasic:
    def test_interior_minimum_1d(self):
        # f(x) = x^2 - x on [0, 10]: minimum at 0.5
        p = dense_problem([[2.0]], np.array([-1.0]), np.zeros(1), np.array([10.0]))
        sol = mprgp_solve(p, np.array([0.0]), SolverConfig(rtol=1e-8))
        assert sol.alpha[0] == pytest.approx(0.5, abs=1e-7)
        assert sol.converged

    def test_active_lower_bound_1d(self):
        # f(x) = x^2/2 + x on [0, 10]: gradient positive everywhere, so x* = 0
        p = dense_problem([[1.0]], np.array([1.0]), np.zeros(1), np.array([10.0]))
        sol = mprgp_solve(p, np.array([5.0]), SolverConfig(rtol=1e-8))
        assert sol.alpha[0] == 0.0
        assert sol.converged

    def test_four_point_separable_dual_matches_oracle(self):
        # Two points per class at (+-1, +-1), augmented with gamma = 1.  Four
        # points in three augmented dimensions make the Gramian singular, so
        # the optimal multipliers form a face rather than a point; the solver
        # and the oracle may legitimately land on different vertices of it.
        # The comparison is therefore on the well-defined quantities: the
        # optimal objective, KKT at the solver's iterate, and the (unique)
        # reconstructed normal vector.
        features = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]])
        labels = np.array([1, 1, -1, -1])
        augmented = np.hstack([features, np.ones((4, 1))])
        y = labels.astype(float)
        hessian = (y[:, None] * (augmented @ augmented.T)) * y[None, :]
        linear = -np.ones(4)
        lower, upper = np.zeros(4), np.ones(4)
        expected = active_set_qp_oracle(hessian, linear, lower, upper)
        p = dense_problem(hessian, linear, lower, upper)
        sol = mprgp_solve(p, np.full(4, 0.99), SolverConfig(rtol=1e-6))

        def objective(x):
            return 0.5 * x @ hessian @ x + linear @ x

        assert objective(sol.alpha) == pytest.approx(objective(expected), abs=1e-10)
        _, _, kkt_norm = projected_gradient(p, sol.alpha)
        assert kkt_norm < 1e-6
        w_solver = augmented.T @ (y * sol.alpha)
        w_oracle = augmented.T @ (y * expected)
        assert np.max(np.abs(w_solver - w_oracle)) < 1e-6

    def test_nonconvergence_is_flagged_not_fatal(self):
        rng = np.random.default_rng(0)
        inst = random_svm_dual_instance(rng, m=6, loss="l1", c=8.0)
        p = dense_problem(inst["hessian"], inst["linear"], inst["lower"], inst["upper"])
        sol = mprgp_solve(p, np.full(6, 0.99 * 8.0),
                          SolverConfig(rtol=1e-12, max_iterations=3))
        assert not sol.converged
        assert sol.iterations == 3

    def test_explicit_expansion_step_is_recorded(self):
        p = dense_problem([[2.0]], np.array([-1.0]), np.zeros(1), np.array([10.0]))
        sol = mprgp_solve(p, np.zeros(1), SolverConfig(expansion_step=0.7))
        assert sol.expansion_step == 0.7

    def test_auto_expansion_step_uses_spectral_norm(self):
        rng = np.random.default_rng(5)
        inst = random_svm_dual_instance(rng, m=5, loss="l1", c=1.0)
        hessian = inst["hessian"]
        p = dense_problem(hessian, inst["linear"], inst["lower"], inst["upper"])
        cfg = SolverConfig(rtol=1e-6)
        sol = mprgp_solve(p, np.full(5, 0.99), cfg)
        norm_est = estimate_spectral_norm(lambda v: hessian @ v, 5, cfg)
        assert sol.expansion_step == pytest.approx(EXPANSION_COEFFICIENT / norm_est)


class TestOracleEquivalence:
    @pytest.mark.parametrize("loss", ["l1", "l2"])
    def test_random_instances_match_oracle(self, loss):
        rng = np.random.default_rng(108)
        for trial in range(25):
            c = float(rng.choice([0.125, 1.0, 8.0]))
            inst = random_svm_dual_instance(rng, loss=loss, c=c)
            m = inst["linear"].size
            expected = active_set_qp_oracle(
                inst["hessian"], inst["linear"], inst["lower"], inst["upper"]
            )
            p = dense_problem(inst["hessian"], inst["linear"],
                              inst["lower"], inst["upper"])
            sol = mprgp_solve(p, np.full(m, 0.99 * c), SolverConfig(rtol=1e-6))
            err = np.max(np.abs(sol.alpha - expected))
            assert err < 1e-6, f"trial {trial}: error {err}"
            assert_monotone(sol.objective_trace)

    def test_feasibility_exact_throughout(self):
        # bounds hold exactly (not within a tolerance) for the returned iterate
        rng = np.random.default_rng(31)
        for _ in range(10):
            c = 2.0
            inst = random_svm_dual_instance(rng, loss="l1", c=c)
            m = inst["linear"].size
            p = dense_problem(inst["hessian"], inst["linear"],
                              inst["lower"], inst["upper"])
            sol = mprgp_solve(p, np.full(m, 0.99 * c), SolverConfig(rtol=1e-8))
            assert np.all(sol.alpha >= inst["lower"])
            assert np.all(sol.alpha <= inst["upper"])

    def test_kkt_certificate(self):
        rng = np.random.default_rng(77)
        inst = random_svm_dual_instance(rng, m=7, loss="l1", c=1.0)
        p = dense_problem(inst["hessian"], inst["linear"],
                          inst["lower"], inst["upper"])
        cfg = SolverConfig(rtol=1e-6)
        sol = mprgp_solve(p, np.full(7, 0.99), cfg)
        assert sol.converged
        assert (sol.final_projected_gradient_norm
                <= cfg.rtol * sol.initial_projected_gradient_norm)

    def test_l2_duals_never_hit_nonpositive_curvature(self):
        rng = np.random.default_rng(55)
        for _ in range(10):
            inst = random_svm_dual_instance(rng, loss="l2", c=4.0)
            m = inst["linear"].size
            p = dense_problem(inst["hessian"], inst["linear"], inst["lower"])
            sol = mprgp_solve(p, np.full(m, 0.99 * 4.0), SolverConfig(rtol=1e-8))
            assert sol.curvature_failures == 0
            assert sol.converged


class TestOperatorChecks:
    def test_valid_operator_passes(self):
        rng = np.random.default_rng(1)
        inst = random_svm_dual_instance(rng, m=5)
        p = dense_problem(inst["hessian"], inst["linear"],
                          inst["lower"], inst["upper"])
        check_operator(p)

    def test_asymmetric_operator_caught(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        p = dense_problem(a, np.zeros(2), np.zeros(2))
        with pytest.raises(NumericalError, match="symmetric"):
            check_operator(p)

    def test_nonlinear_operator_caught(self):
        p = QpProblem(
            hessian_apply=lambda v: v ** 2,
            linear_term=np.zeros(2),
            lower_bound=np.zeros(2),
        )
        with pytest.raises(NumericalError, match="linear"):
            check_operator(p)
