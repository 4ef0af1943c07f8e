"""Per-class sufficient statistics, two-sample t-statistics, feature ranking
and the largest-eigenvalue curve of nested correlation matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .data import LabeledDataset
from .errors import DataError

__all__ = [
    "ClassSummary",
    "TStats",
    "FeatureRanking",
    "LambdaMaxCurve",
    "T_SENTINEL",
    "class_summaries",
    "t_statistics",
    "rank_by_abs",
    "pooled_diag",
    "lambda_max_curve",
]

#: Magnitude substituted for an infinite t-statistic.
T_SENTINEL = 1e15
#: Relative floor applied to zero pooled variances.
VAR_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class ClassSummary:
    n: int
    means: np.ndarray
    variances: np.ndarray

    @property
    def p(self) -> int:
        return self.means.shape[0]


@dataclass(frozen=True)
class TStats:
    values: np.ndarray
    #: features whose |T| was infinite and replaced by the sentinel
    capped: np.ndarray

    @property
    def p(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeatureRanking:
    """Features sorted by decreasing ``|scores|``.

    ``order`` holds 0-based feature indices; ``order[0]`` is the top feature.
    """

    order: np.ndarray
    scores: np.ndarray

    @property
    def p(self) -> int:
        return self.order.shape[0]

    def inverse(self) -> np.ndarray:
        """Rank position (0-based) of every feature."""
        inv = np.empty_like(self.order)
        inv[self.order] = np.arange(self.order.shape[0])
        return inv

    def top(self, m: int) -> np.ndarray:
        return self.order[:m]


@dataclass(frozen=True)
class LambdaMaxCurve:
    values: np.ndarray
    iterations: Optional[np.ndarray] = None

    def __len__(self):
        return self.values.shape[0]


def _frozen(a):
    a = np.asarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _summary(X) -> ClassSummary:
    return ClassSummary(
        n=X.shape[0],
        means=_frozen(X.mean(axis=0)),
        variances=_frozen(X.var(axis=0, ddof=1)),
    )


def class_summaries(ds: LabeledDataset):
    """Means and unbiased variances of every feature within each class."""
    return _summary(ds.class_rows(1)), _summary(ds.class_rows(2))


def _check_same_p(s1, s2):
    if s1.p != s2.p:
        raise DataError(f"dimension mismatch: {s1.p} vs {s2.p} features")


def t_statistics(s1: ClassSummary, s2: ClassSummary) -> TStats:
    """Welch-type two-sample t-statistic of every feature.

    A feature with zero variance in both classes gets ``T = 0`` when the
    class means agree and ``+/-T_SENTINEL`` (flagged in ``capped``) when
    they differ.
    """
    _check_same_p(s1, s2)
    diff = s1.means - s2.means
    se = np.sqrt(s1.variances / s1.n + s2.variances / s2.n)
    T = np.zeros_like(diff)
    ok = se > 0
    T[ok] = diff[ok] / se[ok]
    capped = ~ok & (diff != 0)
    T[capped] = np.sign(diff[capped]) * T_SENTINEL
    big = np.abs(T) > T_SENTINEL
    T[big] = np.sign(T[big]) * T_SENTINEL
    return TStats(values=_frozen(T), capped=capped | big)


def rank_by_abs(stat) -> FeatureRanking:
    """Order features by decreasing absolute score, ties by index."""
    s = np.asarray(stat, dtype=np.float64)
    # stable sort on -|s| keeps ascending index among ties
    order = np.argsort(-np.abs(s), kind="stable")
    return FeatureRanking(order=order, scores=_frozen(s))


def pooled_diag(s1: ClassSummary, s2: ClassSummary, return_flags: bool = False):
    """Average of the two within-class variances, floored away from zero.

    Zero entries become ``1e-12 * max(pooled)`` (or ``1e-12`` when every
    entry is zero).  With ``return_flags`` the boolean mask of floored
    features is returned as well.
    """
    _check_same_p(s1, s2)
    d = (s1.variances + s2.variances) / 2.0
    zero = d <= 0.0
    if zero.any():
        top = d.max()
        d = d.copy()
        d[zero] = VAR_FLOOR_REL * (top if top > 0 else 1.0)
    if return_flags:
        return d, zero
    return d


def _within_class_columns(ds: LabeledDataset, cols) -> np.ndarray:
    X = ds.features[:, cols]
    Z = np.empty_like(X)
    for k in (1, 2):
        rows = ds.labels == k
        Z[rows] = X[rows] - X[rows].mean(axis=0)
    norms = np.sqrt((Z * Z).sum(axis=0))
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        j = int(cols[bad[0]])
        name = ds.feature_names[j] if ds.feature_names else f"#{j + 1}"
        raise DataError(f"zero within-class variance for feature {name} in the top-M set")
    return Z / norms


def lambda_max_curve(
    ds: LabeledDataset,
    ranking: FeatureRanking,
    M: int,
    tol: float = 1e-8,
    max_iter: int = 10000,
) -> LambdaMaxCurve:
    """Largest eigenvalue of the correlation matrix of the top-m features,
    for m = 1..M.

    Columns are centered within class and scaled to unit norm, so
    ``Z^T Z`` is the sample correlation matrix and the n x n Gram matrix
    ``Z Z^T`` has the same nonzero spectrum.  The Gram matrix is updated by
    one rank-1 term per added feature and its top eigenvalue found by a
    warm-started power iteration.
    """
    if not 1 <= M <= ds.p:
        raise DataError(f"M must lie in [1, {ds.p}], got {M}")
    if ds.n < 3:
        raise DataError("need at least 3 samples")
    Z = _within_class_columns(ds, ranking.order[:M])
    values, iters = kernels.lambda_max_path(Z, tol=tol, max_iter=max_iter)
    # 1x1 correlation matrix
    values[0] = 1.0
    return LambdaMaxCurve(values=_frozen(values), iterations=iters)
