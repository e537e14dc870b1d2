import numpy as np
import pytest

from skillpipe import mathkit
from skillpipe.mathkit import (
    cmaes_minimize,
    hosvd,
    least_squares,
    pearson,
    pinv,
    reconstruct,
    tucker_full,
)


class TestLeastSquares:
    def test_identity_system(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        fit = least_squares(np.eye(3), b)
        assert np.allclose(fit.x, b)

    def test_recovers_known_solution(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(20, 6))
        x0 = rng.normal(size=(6, 3))
        fit = least_squares(a, a @ x0)
        assert np.allclose(fit.x, x0, atol=1e-8)
        assert not fit.rank_deficient

    def test_residual_orthogonal_to_column_space(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(30, 5))
        b = rng.normal(size=(30, 2))
        fit = least_squares(a, b)
        residual = b - a @ fit.x
        assert np.max(np.abs(a.T @ residual)) < 1e-8

    def test_large_ridge_shrinks_to_zero(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(10, 4))
        b = rng.normal(size=(10, 2))
        fit = least_squares(a, b, ridge=1e12)
        assert np.max(np.abs(fit.x)) < 1e-8

    def test_rank_deficient_is_flagged_min_norm(self):
        a = np.array([[1.0, 1.0], [1.0, 1.0]])
        b = np.array([2.0, 2.0])
        fit = least_squares(a, b)
        assert fit.rank_deficient
        # minimum-norm solution of x1 + x2 = 2
        assert np.allclose(fit.x, [1.0, 1.0])

    def test_matches_normal_equations_when_well_conditioned(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = rng.normal(size=(25, 6))
            b = rng.normal(size=(25,))
            fit = least_squares(a, b)
            x_ne = np.linalg.solve(a.T @ a, a.T @ b)
            assert np.allclose(fit.x, x_ne, atol=1e-6)


class TestPinv:
    def test_identity(self):
        assert np.allclose(pinv(np.eye(4)), np.eye(4))

    def test_diagonal_rule(self):
        m = np.diag([2.0, 0.0])
        assert np.allclose(pinv(m), np.diag([0.5, 0.0]))

    def test_right_inverse_full_row_rank(self):
        rng = np.random.default_rng(4)
        m = rng.normal(size=(2, 15))
        assert np.allclose(m @ pinv(m), np.eye(2), atol=1e-8)

    def test_moore_penrose_identities_random(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            rows = rng.integers(1, 31)
            cols = rng.integers(1, 31)
            m = rng.normal(size=(rows, cols))
            p = pinv(m)
            assert np.allclose(m @ p @ m, m, atol=1e-8)
            assert np.allclose(p @ m @ p, p, atol=1e-8)
            assert np.allclose((m @ p).T, m @ p, atol=1e-8)
            assert np.allclose((p @ m).T, p @ m, atol=1e-8)


class TestHosvd:
    def test_rank_one_tensor_exact(self):
        rng = np.random.default_rng(6)
        u = rng.normal(size=5)
        v = rng.normal(size=4)
        w = rng.normal(size=3)
        t = np.einsum("i,j,k->ijk", u, v, w)
        factors = hosvd(t, (1, 1, 1))
        assert np.max(np.abs(tucker_full(factors) - t)) < 1e-10

    def test_full_ranks_exact(self):
        rng = np.random.default_rng(7)
        t = rng.normal(size=(5, 4, 3))
        factors = hosvd(t, (5, 4, 3))
        assert np.max(np.abs(tucker_full(factors) - t)) < 1e-8

    def test_factor_orthonormality(self):
        rng = np.random.default_rng(8)
        t = rng.normal(size=(6, 5, 4))
        factors = hosvd(t, (3, 2, 2))
        for u in (factors.u1, factors.u2, factors.u3):
            gram = u.T @ u
            assert np.max(np.abs(gram - np.eye(gram.shape[0]))) < 1e-8

    def test_truncation_error_bound(self):
        # ||T - T_hat||^2 <= sum over modes of discarded singular values^2
        rng = np.random.default_rng(9)
        for _ in range(10):
            t = rng.normal(size=(6, 5, 4))
            ranks = (
                int(rng.integers(1, 6)),
                int(rng.integers(1, 5)),
                int(rng.integers(1, 4)),
            )
            factors = hosvd(t, ranks)
            err = np.sum((tucker_full(factors) - t) ** 2)
            bound = 0.0
            for mode, r in enumerate(ranks):
                unfolded = np.moveaxis(t, mode, 0).reshape(t.shape[mode], -1)
                s = np.linalg.svd(unfolded, compute_uv=False)
                bound += np.sum(s[r:] ** 2)
            assert err <= bound + 1e-6

    def test_bad_ranks_rejected(self):
        t = np.zeros((3, 3, 3))
        with pytest.raises(ValueError):
            hosvd(t, (4, 1, 1))


class TestReconstruct:
    def test_slice_matches_source_within_truncation(self):
        rng = np.random.default_rng(10)
        t = rng.normal(size=(6, 5, 4))
        factors = hosvd(t, (6, 5, 4))
        for k in range(4):
            assert np.allclose(reconstruct(factors, k), t[:, :, k], atol=1e-8)

    def test_zero_weight_gives_zero_layer(self):
        rng = np.random.default_rng(11)
        factors = hosvd(rng.normal(size=(4, 4, 3)), (2, 2, 2))
        assert np.allclose(reconstruct(factors, np.zeros(2)), 0.0)

    def test_linearity(self):
        rng = np.random.default_rng(12)
        factors = hosvd(rng.normal(size=(4, 4, 3)), (3, 3, 2))
        w1 = rng.normal(size=2)
        w2 = rng.normal(size=2)
        lhs = reconstruct(factors, w1 + w2)
        rhs = reconstruct(factors, w1) + reconstruct(factors, w2)
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_weight_length_checked(self):
        factors = hosvd(np.zeros((3, 3, 3)) + np.eye(3)[:, :, None], (2, 2, 2))
        with pytest.raises(ValueError):
            reconstruct(factors, np.zeros(3))


class TestCmaes:
    def test_1d_quadratic(self):
        x, f, _ = cmaes_minimize(lambda v: (v[0] - 3.0) ** 2, [0.0], 0.5, 800, seed=1)
        assert abs(x[0] - 3.0) < 1e-6

    def test_constant_objective(self):
        x, f, hist = cmaes_minimize(lambda v: 7.0, np.zeros(3), 1.0, 60, seed=2)
        assert f == 7.0
        assert np.all(hist == 7.0)

    def test_sphere_10d(self):
        x, f, hist = cmaes_minimize(
            lambda v: float(np.sum(v * v)), np.full(10, 2.0), 1.0, 5000, seed=3
        )
        assert f < 1e-8
        assert len(hist) <= 5000

    def test_seed_reproducibility(self):
        def obj(v):
            return float(np.sum((v - 1.5) ** 2))

        r1 = cmaes_minimize(obj, np.zeros(4), 0.7, 400, seed=9)
        r2 = cmaes_minimize(obj, np.zeros(4), 0.7, 400, seed=9)
        assert np.array_equal(r1[0], r2[0])
        assert r1[1] == r2[1]
        assert np.array_equal(r1[2], r2[2])

    def test_history_monotone_nonincreasing(self):
        _, _, hist = cmaes_minimize(
            lambda v: float(np.sum(v**4)), np.full(5, 1.0), 0.5, 600, seed=4
        )
        assert np.all(np.diff(hist) <= 0)

    def test_non_finite_values_survive(self):
        def nasty(v):
            return float("nan") if v[0] > 0 else float(np.sum(v * v))

        x, f, _ = cmaes_minimize(nasty, np.array([-1.0, 0.5]), 0.4, 300, seed=5)
        assert np.isfinite(f)

    def test_budget_below_population_rejected(self):
        with pytest.raises(ValueError):
            cmaes_minimize(lambda v: 0.0, np.zeros(3), 1.0, 2, seed=0)


class TestPearson:
    def test_perfect_correlations(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert pearson(x, x) == pytest.approx(1.0)
        assert pearson(x, -x) == pytest.approx(-1.0)

    def test_affine_invariance(self):
        x = np.array([0.0, 1.0, 2.0, 5.0])
        assert pearson(x, 2 * x + 3) == pytest.approx(1.0)

    def test_hand_computed_sample(self):
        # {(1,2),(2,1),(3,3)}: covariance 1, std sqrt(2) each -> r = 0.5
        assert pearson([1, 2, 3], [2, 1, 3]) == pytest.approx(0.5)

    def test_zero_variance_flagged(self):
        with pytest.warns(UserWarning):
            r = pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        assert r == 0.0

    def test_length_validation(self):
        with pytest.raises(ValueError):
            pearson([1.0], [2.0])
