"""PCA via covariance eigendecomposition, projection and reconstruction,
and class-separation ("discriminatory power") ranking of components."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .linalg import sample_covariance, sym_eigen


@dataclass(frozen=True)
class PcaModel:
    """Column means, orthonormal component directions, and per-component
    score variances (covariance denominator n).

    ``ranking`` records whether components are ordered by variance or by
    discriminatory power.
    """

    mean: np.ndarray
    components: np.ndarray
    variances: np.ndarray
    ranking: str = "variance"

    @property
    def r(self) -> int:
        return self.components.shape[1]


def pca_fit(X: np.ndarray, r: int) -> PcaModel:
    """Top-r eigenpairs of the sample covariance matrix."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not 1 <= r <= min(n - 1, p):
        raise ValueError(f"r must lie in 1..min(n-1, p) = {min(n - 1, p)}, got {r}")
    eig = sym_eigen(sample_covariance(X))
    return PcaModel(mean=X.mean(axis=0), components=eig.eigenvectors[:, :r],
                    variances=eig.eigenvalues[:r])


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Scores (X - mean) V, one row per sample."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.mean.shape[0]:
        raise ValueError(f"expected {model.mean.shape[0]} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.components


def reconstruction_error(model: PcaModel, X: np.ndarray) -> float:
    """(1/n) sum_i |(x_i - mean) - V V^T (x_i - mean)|^2."""
    X = np.asarray(X, dtype=float)
    centered = X - model.mean
    resid = centered - pca_transform(model, X) @ model.components.T
    return float(np.sum(resid * resid)) / X.shape[0]


def discriminatory_power(model: PcaModel, ds: Dataset) -> np.ndarray:
    """Per component k: [v_k^T (mean0 - mean1)]^2 / variance_k.

    High-variance components need not separate the classes; this measures
    which ones actually do.
    """
    if np.any(model.variances <= 0.0):
        k = int(np.argmax(model.variances <= 0.0))
        raise ValueError(f"component {k} has non-positive variance")
    X0 = ds.features[ds.labels == 0]
    X1 = ds.features[ds.labels == 1]
    if X0.shape[0] == 0 or X1.shape[0] == 0:
        raise ValueError("both classes must be present")
    diff = X0.mean(axis=0) - X1.mean(axis=0)
    proj = model.components.T @ diff
    return proj * proj / model.variances


def select_components_by_power(model: PcaModel, ds: Dataset, r_keep: int) -> PcaModel:
    """Reorder components by discriminatory power (descending, stable so
    ties keep the variance order) and truncate to ``r_keep``."""
    if not 1 <= r_keep <= model.r:
        raise ValueError(f"r_keep must lie in 1..{model.r}, got {r_keep}")
    theta = discriminatory_power(model, ds)
    order = np.argsort(-theta, kind="stable")[:r_keep]
    return PcaModel(mean=model.mean, components=model.components[:, order],
                    variances=model.variances[order], ranking="power")
