"""Elastic-net coordinate descent, sign regions, and problem instances."""

import numpy as np
import pytest

from tunebound import (
    ConvergenceError,
    ProblemInstance,
    RegionSolution,
    elastic_net_region,
    elastic_net_solve,
    smallest_singular_value,
    validation_loss,
)
from tunebound.tuning import DistributionSpec, gen_instances


@pytest.fixture(scope="module")
def dense_instances():
    spec = DistributionSpec(
        kind="gaussian-dense", m=10, m_val=10, d=4, noise_std=0.5, seed=44
    )
    return gen_instances(spec, 20)


class TestSolver:
    def test_zero_target_gives_the_zero_solution(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 3))
        x = ProblemInstance(A=A, b=np.zeros(5), A_val=A, b_val=np.zeros(5))
        sol = elastic_net_solve(x, 0.3, 0.1)
        assert np.all(sol.theta == 0.0)
        assert sol.sign_pattern == (0, 0, 0)

    def test_large_l1_weight_shrinks_everything_to_exact_zero(self, dense_instances):
        x = dense_instances[2]
        thresh = np.max(np.abs(x.A.T @ x.b / x.m))
        sol = elastic_net_solve(x, thresh * 1.000001, 0.1)
        assert np.all(sol.theta == 0.0)
        assert sol.sign_pattern == (0, 0, 0, 0)
        assert elastic_net_region(x, thresh * 2.0, 0.05) == (0, 0, 0, 0)

    def test_matches_the_per_region_linear_system(self, dense_instances):
        rng = np.random.default_rng(4000)
        worst = 0.0
        for k in range(50):
            x = dense_instances[k % 20]
            a1 = float(rng.uniform(0.01, 1.0))
            a2 = float(rng.uniform(0.01, 0.5))
            sol = elastic_net_solve(x, a1, a2)
            active = [j for j, s in enumerate(sol.sign_pattern) if s != 0]
            for j, s in enumerate(sol.sign_pattern):
                if s == 0:
                    assert sol.theta[j] == 0.0
            if active:
                AE = x.A[:, active]
                sigma = np.array([sol.sign_pattern[j] for j in active], dtype=float)
                lhs = AE.T @ AE / x.m + 2.0 * a2 * np.eye(len(active))
                rhs = AE.T @ x.b / x.m - a1 * sigma
                theta_ref = np.linalg.solve(lhs, rhs)
                worst = max(worst, np.max(np.abs(theta_ref - sol.theta[active])))
            assert sol.kkt_residual <= 1e-6
        assert worst <= 1e-6

    def test_sign_pattern_labels_match_coefficient_signs(self, dense_instances):
        rng = np.random.default_rng(151)
        for _ in range(60):
            x = dense_instances[int(rng.integers(0, 20))]
            sol = elastic_net_solve(
                x, float(rng.uniform(0.01, 0.8)), float(rng.uniform(0.01, 0.5))
            )
            for value, label in zip(sol.theta, sol.sign_pattern):
                if label == 0:
                    assert abs(value) <= 1e-10
                else:
                    assert np.sign(value) == label

    def test_repeated_solves_are_bit_identical(self, dense_instances):
        x = dense_instances[3]
        first = elastic_net_solve(x, 0.05, 0.02)
        second = elastic_net_solve(x, 0.05, 0.02)
        assert first.theta.tobytes() == second.theta.tobytes()
        assert first.sign_pattern == second.sign_pattern
        assert first.kkt_residual == second.kkt_residual

    def test_weights_must_be_positive(self, dense_instances):
        with pytest.raises(ValueError):
            elastic_net_solve(dense_instances[0], 0.0, 0.1)
        with pytest.raises(ValueError):
            elastic_net_solve(dense_instances[0], 0.1, -0.5)

    def test_iteration_cap_raises_and_carries_the_best_iterate(self, dense_instances):
        with pytest.raises(ConvergenceError) as excinfo:
            elastic_net_solve(dense_instances[1], 0.01, 0.01, max_iters=1)
        best = excinfo.value.best
        assert isinstance(best, RegionSolution)
        assert best.theta.shape == (4,)
        assert best.kkt_residual > 0.0

    def test_region_helper_propagates_failures(self, dense_instances):
        with pytest.raises(ConvergenceError):
            elastic_net_region(dense_instances[1], 0.01, 0.01, max_iters=1)


class TestSignRegions:
    def test_dense_weight_sweep_stays_within_the_pattern_budget(
        self, dense_instances
    ):
        x = dense_instances[0]
        rng = np.random.default_rng(777)
        seen = set()
        for _ in range(10_000):
            a1 = 10.0 ** rng.uniform(-3.0, 0.3)
            a2 = 10.0 ** rng.uniform(-3.0, 0.0)
            seen.add(elastic_net_solve(x, a1, a2).sign_pattern)
        assert len(seen) <= 81  # 3**4 possible sign vectors
        assert len(seen) == 5

    def test_patterns_are_locally_constant(self, dense_instances):
        x = dense_instances[0]
        rng = np.random.default_rng(123)
        for _ in range(300):
            a1 = 10.0 ** rng.uniform(-2.5, 0.0)
            a2 = 10.0 ** rng.uniform(-2.5, 0.0)
            base = elastic_net_solve(x, a1, a2).sign_pattern
            assert elastic_net_solve(x, a1 + 1e-9, a2).sign_pattern == base
            assert elastic_net_solve(x, a1, a2 + 1e-9).sign_pattern == base


class TestProblemInstance:
    def test_shape_validation(self):
        good = np.ones((3, 2))
        with pytest.raises(ValueError):
            ProblemInstance(A=np.ones(3), b=np.ones(3), A_val=good, b_val=np.ones(3))
        with pytest.raises(ValueError):
            ProblemInstance(A=good, b=np.ones(2), A_val=good, b_val=np.ones(3))
        with pytest.raises(ValueError):
            ProblemInstance(
                A=good, b=np.ones(3), A_val=np.ones((3, 5)), b_val=np.ones(3)
            )
        with pytest.raises(ValueError):
            ProblemInstance(A=good, b=np.ones(3), A_val=good, b_val=np.ones(7))

    def test_dimension_properties(self):
        x = ProblemInstance(
            A=np.ones((5, 2)), b=np.ones(5), A_val=np.ones((3, 2)), b_val=np.ones(3)
        )
        assert (x.m, x.m_val, x.d) == (5, 3, 2)

    def test_arrays_are_frozen(self):
        x = ProblemInstance(
            A=np.ones((2, 2)), b=np.ones(2), A_val=np.ones((2, 2)), b_val=np.ones(2)
        )
        with pytest.raises(ValueError):
            x.A[0, 0] = 99.0
        with pytest.raises(ValueError):
            x.b[0] = 99.0

    def test_save_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        x = ProblemInstance(
            A=rng.standard_normal((4, 3)),
            b=rng.standard_normal(4),
            A_val=rng.standard_normal((2, 3)),
            b_val=rng.standard_normal(2),
        )
        path = tmp_path / "instance.json"
        x.save(path)
        again = ProblemInstance.load(path)
        for name in ("A", "b", "A_val", "b_val"):
            assert np.array_equal(getattr(again, name), getattr(x, name))

    def test_json_round_trip(self):
        x = ProblemInstance(
            A=[[1.0, 2.0]], b=[3.0], A_val=[[4.0, 5.0]], b_val=[6.0]
        )
        again = ProblemInstance.from_json(x.to_json())
        assert np.array_equal(again.A, x.A)
        assert np.array_equal(again.b_val, x.b_val)


class TestValidationLoss:
    def test_perfect_fit_scores_zero(self):
        x = ProblemInstance(
            A=np.eye(2), b=np.ones(2), A_val=np.eye(2), b_val=np.array([3.0, 4.0])
        )
        assert validation_loss(x, [3.0, 4.0], "group") == 0.0
        assert validation_loss(x, [3.0, 4.0], "fused") == 0.0

    def test_kind_specific_scaling(self):
        x = ProblemInstance(
            A=np.eye(2), b=np.zeros(2), A_val=np.eye(2), b_val=np.zeros(2)
        )
        theta = [3.0, 4.0]
        assert validation_loss(x, theta, "fused") == 12.5
        assert validation_loss(x, theta, "group") == 25.0

    def test_unknown_kind_is_rejected(self):
        x = ProblemInstance(
            A=np.eye(2), b=np.zeros(2), A_val=np.eye(2), b_val=np.zeros(2)
        )
        with pytest.raises(ValueError):
            validation_loss(x, [1.0, 2.0], "ridge")

    def test_smallest_singular_value(self):
        assert smallest_singular_value(np.eye(3)) == pytest.approx(1.0)
        assert smallest_singular_value(np.diag([4.0, 2.0, 0.5])) == pytest.approx(0.5)
