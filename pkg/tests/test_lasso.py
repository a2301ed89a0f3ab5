import numpy as np
import pytest

from featlearn.data import Dataset, kfold
from featlearn.lasso import (lambda_max, lambda_path, lasso_cv, lasso_fit,
                             lasso_objective, selected_features)


def _centered_problem(rng, n, p, signal=0):
    X = rng.normal(size=(n, p))
    X -= X.mean(axis=0)
    beta = np.zeros(p)
    beta[:signal] = 1.0
    y = X @ beta + rng.normal(size=n)
    y -= y.mean()
    return X, y


def _orthogonal_design(rng, n, p):
    Q, _ = np.linalg.qr(rng.normal(size=(n, p)))
    return Q * np.sqrt(n)  # X^T X = n I


class TestLassoFit:
    @pytest.mark.parametrize("seed", range(10))
    def test_lambda_max_gives_exact_zeros(self, seed):
        rng = np.random.default_rng(seed)
        X, y = _centered_problem(rng, 25, 8)
        fit = lasso_fit(X, y, lambda_max(X, y))
        assert np.all(fit.beta == 0.0)

    def test_zero_lambda_least_squares_on_orthogonal_design(self):
        rng = np.random.default_rng(1)
        X = _orthogonal_design(rng, 30, 5)
        y = rng.normal(size=30)
        y -= y.mean()
        fit = lasso_fit(X, y, 0.0)
        np.testing.assert_allclose(fit.beta, X.T @ y / 30, atol=1e-10)

    @pytest.mark.parametrize("seed", range(10))
    def test_orthogonal_design_soft_threshold_closed_form(self, seed):
        rng = np.random.default_rng(100 + seed)
        p = int(rng.integers(2, 8))
        X = _orthogonal_design(rng, 20 + p, p)
        y = rng.normal(size=20 + p)
        y -= y.mean()
        z = X.T @ y / X.shape[0]
        lam = float(rng.uniform(0.1, 1.2)) * np.max(np.abs(z))
        expected = np.sign(z) * np.maximum(np.abs(z) - lam / 2.0, 0.0)
        fit = lasso_fit(X, y, lam)
        np.testing.assert_allclose(fit.beta, expected, atol=1e-8)

    @pytest.mark.parametrize("seed", range(10))
    def test_kkt_certificate(self, seed):
        rng = np.random.default_rng(200 + seed)
        X, y = _centered_problem(rng, 40, 12, signal=3)
        lam = 0.3 * lambda_max(X, y)
        fit = lasso_fit(X, y, lam)
        assert fit.converged
        grad = 2.0 * (X.T @ (y - X @ fit.beta)) / X.shape[0]
        zero = fit.beta == 0.0
        assert np.all(np.abs(grad[zero]) <= lam + 1e-6)
        np.testing.assert_allclose(grad[~zero], lam * np.sign(fit.beta[~zero]), atol=1e-6)

    def test_objective_field_matches_recomputation(self):
        rng = np.random.default_rng(4)
        X, y = _centered_problem(rng, 30, 6, signal=2)
        lam = 0.2 * lambda_max(X, y)
        fit = lasso_fit(X, y, lam)
        assert abs(fit.objective - lasso_objective(X, y, fit.beta, lam)) < 1e-10

    def test_objective_nonincreasing_per_sweep(self):
        rng = np.random.default_rng(5)
        X, y = _centered_problem(rng, 35, 10, signal=4)
        lam = 0.1 * lambda_max(X, y)
        prev = lasso_objective(X, y, np.zeros(10), lam)
        for sweeps in range(1, 15):
            fit = lasso_fit(X, y, lam, tol=0.0, max_iter=sweeps)
            assert fit.objective <= prev + 1e-12 * (1 + abs(prev))
            prev = fit.objective

    def test_label_flip_negates_beta_exactly(self):
        rng = np.random.default_rng(6)
        X, y = _centered_problem(rng, 30, 8, signal=2)
        lam = 0.2 * lambda_max(X, y)
        a = lasso_fit(X, y, lam)
        b = lasso_fit(X, -y, lam)
        np.testing.assert_array_equal(a.beta, -b.beta)

    def test_nonconvergence_flagged(self):
        rng = np.random.default_rng(7)
        X, y = _centered_problem(rng, 40, 10, signal=5)
        fit = lasso_fit(X, y, 1e-6, tol=0.0, max_iter=3)
        assert not fit.converged
        assert fit.iterations_run == 3

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            lasso_fit(np.zeros((3, 2)), np.zeros(3), -0.1)


class TestLambdaPath:
    def test_two_point_endpoints(self):
        rng = np.random.default_rng(0)
        X, y = _centered_problem(rng, 20, 4, signal=1)
        path = lambda_path(X, y, 2, 0.01)
        lmax = lambda_max(X, y)
        np.testing.assert_allclose(path, [lmax, 0.01 * lmax])

    def test_head_of_path_gives_zero_fit(self):
        rng = np.random.default_rng(1)
        X, y = _centered_problem(rng, 25, 6, signal=2)
        path = lambda_path(X, y, 10, 0.05)
        assert np.all(lasso_fit(X, y, path[0]).beta == 0.0)

    def test_strictly_decreasing(self):
        rng = np.random.default_rng(2)
        X, y = _centered_problem(rng, 25, 6, signal=2)
        path = lambda_path(X, y, 12, 0.01)
        assert np.all(np.diff(path) < 0)

    def test_degenerate_y(self):
        X = np.random.default_rng(3).normal(size=(10, 3))
        X -= X.mean(axis=0)
        path = lambda_path(X, np.zeros(10), 5, 0.1)
        np.testing.assert_array_equal(path, [0.0])


class TestSelectedFeatures:
    def test_all_zero(self):
        fit = lasso_fit(np.zeros((3, 2)) + np.array([[1.0, -1], [0, 1], [-1, 0]]),
                        np.zeros(3), 10.0)
        assert selected_features(fit).size == 0

    def test_direct_readoff(self):
        from featlearn.lasso import LassoFit
        fit = LassoFit(beta=np.array([0.5, 0.0, -0.3]), lam=0.1,
                       iterations_run=1, converged=True, objective=0.0)
        np.testing.assert_array_equal(selected_features(fit, eps=1e-8), [0, 2])

    def test_eps_dominates(self):
        from featlearn.lasso import LassoFit
        fit = LassoFit(beta=np.array([0.5, -0.3]), lam=0.1,
                       iterations_run=1, converged=True, objective=0.0)
        assert selected_features(fit, eps=1.0).size == 0


class TestLassoCv:
    def _folds(self, n, k=5, seed=0):
        labels = np.array([0, 1] * (n // 2))
        ds = Dataset.from_arrays(np.zeros((n, 1)), labels)
        return kfold(np.arange(n), ds, k, seed)

    def test_single_lambda(self):
        rng = np.random.default_rng(0)
        X, y = _centered_problem(rng, 20, 4)
        assert lasso_cv(X, y, self._folds(20), [0.5]) == 0.5

    def test_pure_noise_prefers_largest_lambda(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            n, p = 40, 10
            X = rng.normal(size=(n, p))
            X -= X.mean(axis=0)
            y = np.array([-1.0, 1.0] * (n // 2))
            lams = lambda_path(X, y - y.mean(), 8, 0.01)
            best = lasso_cv(X, y, self._folds(n, seed=seed), lams)
            if best == lams[0]:
                wins += 1
        assert wins >= 90

    def test_strong_signal_recovers_support(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            n, p = 60, 20
            X = rng.normal(size=(n, p))
            X -= X.mean(axis=0)
            y = np.sign(X[:, 0] + X[:, 1] + 0.3 * rng.normal(size=n))
            lams = lambda_path(X, y - y.mean(), 10, 0.01)
            best = lasso_cv(X, y, self._folds(n, seed=seed), lams)
            fit = lasso_fit(X, y - y.mean(), best)
            if {0, 1} <= set(selected_features(fit).tolist()):
                wins += 1
        assert wins >= 90

    def test_empty_lambda_list_rejected(self):
        with pytest.raises(ValueError):
            lasso_cv(np.zeros((4, 2)), np.zeros(4), [], [])
