"""Two-sample t statistics per feature, top-m screening, a closed-form
optimal feature count, and cross-validated choice of m."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import Dataset
from .linalg import sample_correlation, sym_eigen


@dataclass(frozen=True)
class TStats:
    """Per-feature statistics t and the permutation ``order`` sorting t^2
    descending (ties broken by ascending feature index)."""

    t: np.ndarray
    order: np.ndarray


def two_sample_t(ds: Dataset) -> TStats:
    """Welch statistic T_j = (mean0_j - mean1_j) / sqrt(s0_j^2/n0 + s1_j^2/n1)
    with per-class variances using denominator n_k - 1."""
    X0 = ds.features[ds.labels == 0]
    X1 = ds.features[ds.labels == 1]
    n0, n1 = X0.shape[0], X1.shape[0]
    if n0 < 2 or n1 < 2:
        raise ValueError(f"need >= 2 rows per class, got n0={n0}, n1={n1}")
    var0 = X0.var(axis=0, ddof=1)
    var1 = X1.var(axis=0, ddof=1)
    denom_sq = var0 / n0 + var1 / n1
    if np.any(denom_sq == 0.0):
        j = int(np.argmax(denom_sq == 0.0))
        raise ValueError(f"feature {ds.feature_names[j]!r} (index {j}) has zero "
                         f"variance in both classes")
    t = (X0.mean(axis=0) - X1.mean(axis=0)) / np.sqrt(denom_sq)
    order = np.argsort(-t * t, kind="stable")
    return TStats(t=t, order=order)


def select_top_m(stats: TStats, m: int) -> np.ndarray:
    """First m features of the t^2 ranking, returned ascending by index."""
    p = stats.t.shape[0]
    if not 1 <= m <= p:
        raise ValueError(f"m must lie in 1..{p}, got {m}")
    return np.sort(stats.order[:m])


def optimal_m(stats: TStats, X_train: np.ndarray, n0: int, n1: int) -> int:
    """Feature count maximizing, over m = 1..p,

        (1 / lam_max^m) * n * [sum_{j<=m} T^2_(j) + m (n0-n1)/n]^2
                        / (m n0 n1 + n0 n1 sum_{j<=m} T^2_(j))

    where T^2_(j) are the ordered squared statistics and lam_max^m is the
    largest eigenvalue of the correlation matrix of the m top-ranked
    features (1 for m = 1). Ties go to the smallest m.
    """
    X_train = np.asarray(X_train, dtype=float)
    n = n0 + n1
    if n < 4:
        raise ValueError("optimal_m needs n0 + n1 >= 4")
    p = stats.t.shape[0]
    t2_sorted = (stats.t ** 2)[stats.order]
    cum_t2 = np.cumsum(t2_sorted)
    best_m, best_score = 1, -np.inf
    for m in range(1, p + 1):
        if m == 1:
            lam = 1.0
        else:
            R = sample_correlation(X_train[:, stats.order[:m]])
            lam = float(sym_eigen(R).eigenvalues[0])
        s = cum_t2[m - 1]
        score = (n * (s + m * (n0 - n1) / n) ** 2) / (lam * (m * n0 * n1 + n0 * n1 * s))
        if score > best_score:
            best_m, best_score = m, score
    return best_m


def ttest_cv(X: np.ndarray, labels: np.ndarray, folds, candidate_ms: Sequence[int],
             classifier_trainer: Callable) -> int:
    """m maximizing mean validation accuracy of the downstream classifier.

    ``classifier_trainer(X_train, y_train)`` must return a predict function;
    the t ranking is recomputed inside each fold. Ties go to the smaller m.
    """
    candidate_ms = sorted(set(int(m) for m in candidate_ms))
    if not candidate_ms:
        raise ValueError("empty candidate list")
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    p = X.shape[1]
    if candidate_ms[0] < 1 or candidate_ms[-1] > p:
        raise ValueError(f"candidate m values must lie in 1..{p}")
    n = X.shape[0]
    scores = np.zeros(len(candidate_ms))
    for fold in folds:
        val = np.asarray(fold, dtype=np.intp)
        mask = np.ones(n, dtype=bool)
        mask[val] = False
        stats = two_sample_t(Dataset.from_arrays(X[mask], labels[mask]))
        for i, m in enumerate(candidate_ms):
            cols = select_top_m(stats, m)
            predict = classifier_trainer(X[mask][:, cols], labels[mask])
            pred = predict(X[val][:, cols])
            scores[i] += float(np.mean(pred == labels[val]))
    best = 0
    for i in range(1, len(candidate_ms)):
        if scores[i] > scores[best]:
            best = i
    return candidate_ms[best]
