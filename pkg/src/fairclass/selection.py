"""Closed-form criteria for the number of retained features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import fair_scale
from .errors import DataError
from .kernels import compensated_cumsum
from .stats import FeatureRanking, LambdaMaxCurve, TStats

__all__ = [
    "SelectionResult",
    "default_search_cap",
    "select_m0",
    "select_m1",
    "m0_objective",
    "m1_objective",
    "m_to_threshold",
]


@dataclass(frozen=True)
class SelectionResult:
    m_hat: int
    objective: np.ndarray

    @property
    def M(self) -> int:
        return self.objective.shape[0]


def default_search_cap(p: int, n: int) -> int:
    return min(p, 50 * n)


def _first_argmax(obj) -> int:
    # np.argmax returns the first maximizer
    return int(np.argmax(obj)) + 1


def m0_objective(alpha_ranked, n1: int, n2: int) -> np.ndarray:
    a = np.asarray(alpha_ranked, dtype=np.float64)
    if a.size == 0:
        raise DataError("empty coefficient vector")
    if n1 < 2 or n2 < 2:
        raise DataError("class sizes must be >= 2")
    n = n1 + n2
    m = np.arange(1, a.size + 1, dtype=np.float64)
    S = compensated_cumsum(a * a)
    return (S + m * (n1 - n2) / (n1 * n2)) ** 2 / (n * m / (n1 * n2) + S)


def select_m0(alpha_ranked, n1: int, n2: int) -> SelectionResult:
    """Feature count maximizing the unit-covariance criterion built from the
    ranked mean differences; ties go to the smallest count."""
    obj = m0_objective(alpha_ranked, n1, n2)
    return SelectionResult(m_hat=_first_argmax(obj), objective=obj)


def m1_objective(t_ranked, lambda_curve, n1: int, n2: int) -> np.ndarray:
    lam = np.asarray(getattr(lambda_curve, "values", lambda_curve), dtype=np.float64)
    t = np.asarray(t_ranked, dtype=np.float64)
    M = lam.shape[0]
    if M == 0:
        raise DataError("empty eigenvalue curve")
    if t.shape[0] < M:
        raise DataError(f"length mismatch: {t.shape[0]} t-statistics for an eigenvalue curve of length {M}")
    t = t[:M]
    n = n1 + n2
    m = np.arange(1, M + 1, dtype=np.float64)
    S = compensated_cumsum(t * t)
    return n * (S + m * (n1 - n2) / n) ** 2 / (m * n1 * n2 + n1 * n2 * S) / lam


def select_m1(t_ranked, lambda_curve: LambdaMaxCurve, n1: int, n2: int) -> SelectionResult:
    """Feature count maximizing the eigenvalue-corrected criterion.

    ``t_ranked`` are t-statistics in ranked order (at least as many as the
    curve covers); the search runs over m = 1..len(lambda_curve).
    """
    obj = m1_objective(t_ranked, lambda_curve, n1, n2)
    return SelectionResult(m_hat=_first_argmax(obj), objective=obj)


def m_to_threshold(t_stats: TStats, ranking: FeatureRanking, m: int, n1: int, n2: int) -> float:
    """Threshold on ``sqrt(n/(n1 n2)) |T_j|`` that keeps exactly the top-m
    features: the midpoint between the m-th and (m+1)-th largest scaled
    values (half the smallest value when m = p)."""
    p = ranking.p
    if not 1 <= m <= p:
        raise DataError(f"m must lie in [1, {p}], got {m}")
    scaled = fair_scale(n1, n2) * np.abs(np.asarray(t_stats.values)[ranking.order])
    if m == p:
        return float(scaled[-1] / 2.0)
    hi, lo = scaled[m - 1], scaled[m]
    if hi == lo:
        raise DataError(f"count not threshold-representable: tied scaled |T| = {hi!r} at positions {m} and {m + 1}")
    return float((hi + lo) / 2.0)
