import numpy as np
import pytest

from featlearn.data import Dataset
from featlearn.linalg import sample_covariance, sym_eigen
from featlearn.pca import (discriminatory_power, pca_fit, pca_transform,
                           reconstruction_error, select_components_by_power)


class TestPcaFit:
    def test_diagonal_direction(self):
        X = np.array([[-1.0, -1.0], [1.0, 1.0], [-2.0, -2.0], [2.0, 2.0]])
        model = pca_fit(X, 1)
        v = model.components[:, 0]
        np.testing.assert_allclose(np.abs(v), [1 / np.sqrt(2)] * 2, atol=1e-10)

    def test_variances_match_sym_eigen_exactly(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 6))
        model = pca_fit(X, 4)
        eig = sym_eigen(sample_covariance(X))
        np.testing.assert_array_equal(model.variances, eig.eigenvalues[:4])
        np.testing.assert_array_equal(model.components, eig.eigenvectors[:, :4])

    def test_isotropic_variances_close(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20000, 4))
        model = pca_fit(X, 4)
        assert np.max(model.variances) - np.min(model.variances) < 0.1

    def test_variances_equal_score_variance(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(25, 5)) * np.array([3.0, 2.0, 1.0, 0.5, 0.1])
        model = pca_fit(X, 3)
        scores = pca_transform(model, X)
        np.testing.assert_allclose(scores.var(axis=0, ddof=0), model.variances, atol=1e-8)

    def test_r_out_of_range(self):
        X = np.random.default_rng(3).normal(size=(4, 6))
        with pytest.raises(ValueError):
            pca_fit(X, 4)  # r > n - 1
        with pytest.raises(ValueError):
            pca_fit(X, 0)


class TestPcaTransform:
    def test_mean_rows_map_to_zero(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(12, 3))
        model = pca_fit(X, 2)
        scores = pca_transform(model, np.tile(model.mean, (4, 1)))
        np.testing.assert_allclose(scores, 0.0, atol=1e-12)

    def test_full_rank_isometry(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(20, 4))
        model = pca_fit(X, 4)
        scores = pca_transform(model, X)
        d_orig = np.linalg.norm(X[:, None] - X[None, :], axis=-1)
        d_proj = np.linalg.norm(scores[:, None] - scores[None, :], axis=-1)
        np.testing.assert_allclose(d_proj, d_orig, atol=1e-8)

    def test_basis_alignment(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(15, 4)) * np.array([4.0, 1.0, 0.3, 0.1])
        model = pca_fit(X, 3)
        point = model.mean + model.components[:, 0]
        scores = pca_transform(model, point[None, :])
        np.testing.assert_allclose(scores, [[1.0, 0.0, 0.0]], atol=1e-10)

    def test_dimension_mismatch(self):
        model = pca_fit(np.random.default_rng(7).normal(size=(10, 3)), 2)
        with pytest.raises(ValueError):
            pca_transform(model, np.zeros((2, 4)))

    def test_inverse_map_full_rank(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(18, 5))
        model = pca_fit(X, 5)
        recon = model.mean + pca_transform(model, X) @ model.components.T
        assert np.max(np.abs(recon - X)) < 1e-8


class TestReconstructionError:
    def test_full_basis_zero(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(20, 4))
        assert reconstruction_error(pca_fit(X, 4), X) < 1e-10

    def test_monotone_in_r(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(30, 6)) @ rng.normal(size=(6, 6))
        errs = [reconstruction_error(pca_fit(X, r), X) for r in range(1, 7)]
        assert all(a >= b - 1e-10 for a, b in zip(errs, errs[1:]))

    @pytest.mark.parametrize("seed", range(8))
    def test_spectral_identity(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(2, 10))
        X = rng.normal(size=(p + 10, p)) * rng.uniform(0.2, 3.0, size=p)
        S = sample_covariance(X)
        eigs = np.sort(np.linalg.eigvalsh(S))[::-1]
        for r in (1, p // 2 or 1, p):
            err = reconstruction_error(pca_fit(X, r), X)
            assert abs(err - (np.trace(S) - eigs[:r].sum())) < 1e-8

    def test_fitted_components_beat_random_bases(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 5)) * np.array([3.0, 2.0, 1.0, 0.5, 0.2])
        model = pca_fit(X, 2)
        best = reconstruction_error(model, X)
        centered = X - X.mean(axis=0)
        n = X.shape[0]
        for _ in range(100):
            A, _ = np.linalg.qr(rng.normal(size=(5, 2)))
            resid = centered - centered @ A @ A.T
            assert np.sum(resid * resid) / n >= best - 1e-8


class TestDiscriminatoryPower:
    def _shifted_ds(self, shift, scale=(np.sqrt(10.0), 1.0), n=4000, seed=12):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(2 * n, 2)) * np.asarray(scale)
        X[n:] += np.asarray(shift)
        labels = [0] * n + [1] * n
        return Dataset.from_arrays(X, labels)

    def test_identical_means_zero(self):
        ds = self._shifted_ds((0.0, 0.0))
        model = pca_fit(ds.features, 2)
        theta = discriminatory_power(model, ds)
        assert np.max(theta) < 0.01

    def test_low_variance_direction_wins(self):
        # shift along the small-variance axis: theta_2 > theta_1
        ds = self._shifted_ds((0.0, 0.8))
        model = pca_fit(ds.features, 2)
        theta = discriminatory_power(model, ds)
        assert theta[1] > theta[0]

    def test_invariant_under_component_sign_flip(self):
        ds = self._shifted_ds((0.5, 0.5))
        model = pca_fit(ds.features, 2)
        flipped = type(model)(mean=model.mean, components=-model.components,
                              variances=model.variances)
        np.testing.assert_allclose(discriminatory_power(model, ds),
                                   discriminatory_power(flipped, ds), atol=1e-12)

    def test_single_class_rejected(self):
        ds = Dataset.from_arrays(np.random.default_rng(0).normal(size=(10, 2)), [0] * 10)
        model = pca_fit(ds.features, 2)
        with pytest.raises(ValueError, match="both classes"):
            discriminatory_power(model, ds)


class TestSelectComponentsByPower:
    def test_reorders_toward_discriminative_axis(self):
        rng = np.random.default_rng(13)
        n = 4000
        X = rng.normal(size=(2 * n, 2)) * np.array([np.sqrt(10.0), 1.0])
        X[n:, 1] += 0.8
        ds = Dataset.from_arrays(X, [0] * n + [1] * n)
        model = pca_fit(ds.features, 2)
        ranked = select_components_by_power(model, ds, 2)
        assert ranked.ranking == "power"
        # the former second component comes first now
        np.testing.assert_allclose(np.abs(ranked.components[:, 0]),
                                   np.abs(model.components[:, 1]), atol=1e-12)

    def test_identity_when_already_sorted(self):
        rng = np.random.default_rng(14)
        n = 2000
        X = rng.normal(size=(2 * n, 2)) * np.array([np.sqrt(10.0), 1.0])
        X[n:, 0] += 2.0  # shift along the high-variance axis keeps order
        ds = Dataset.from_arrays(X, [0] * n + [1] * n)
        model = pca_fit(ds.features, 2)
        ranked = select_components_by_power(model, ds, 2)
        np.testing.assert_array_equal(ranked.components, model.components)
        np.testing.assert_array_equal(ranked.variances, model.variances)

    def test_r_keep_out_of_range(self):
        rng = np.random.default_rng(15)
        ds = Dataset.from_arrays(rng.normal(size=(10, 2)), [0, 1] * 5)
        model = pca_fit(ds.features, 2)
        with pytest.raises(ValueError):
            select_components_by_power(model, ds, 3)


class TestVarianceBudget:
    def test_total_variance_equals_trace(self):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(25, 6)) @ rng.normal(size=(6, 6))
        model = pca_fit(X, 6)
        S = sample_covariance(X)
        assert abs(model.variances.sum() - np.trace(S)) < 1e-8
