"""Synthetic factor-model experiments and the Monte Carlo replication driver.

Random streams come from :class:`numpy.random.SeedSequence` with fixed
spawn keys under one master seed:

* ``(0,)`` - the class-1 mean vector, fixed across replications
* ``(1,)`` - the factor loadings, fixed across replications
* ``(2, r)`` - everything drawn in replication ``r``

so any replication can be rerun alone, in any order or in parallel, with
bitwise-identical output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .classifiers import error_rate, fit_projection, random_unit_direction, tune_shrunken_centroids
from .data import LabeledDataset
from .errors import DataError
from .selection import default_search_cap, select_m1
from .stats import (
    class_summaries,
    lambda_max_curve,
    pooled_diag,
    rank_by_abs,
    t_statistics,
)

__all__ = [
    "SimConfig",
    "Loadings",
    "ReplicationResult",
    "SimSummary",
    "stream",
    "gen_loadings",
    "gen_mean_vector",
    "gen_class_matrix",
    "gaussian_dataset",
    "fixed_design",
    "run_replication",
    "run_simulation",
    "aggregate",
    "theorem3_property_trial",
]


@dataclass(frozen=True)
class SimConfig:
    p: int = 4500
    c: float = 0.02
    d: int = 6
    n1: int = 30
    n2: int = 30
    n_test_per_class: int = 200
    replications: int = 100
    a_max: float = 0.4
    b_max: float = 0.2
    seed: int = 1
    #: cap on the m-search of the feature-count criterion; None -> min(p, 50 n)
    search_cap: Optional[int] = None
    nsc_grid: int = 30

    def __post_init__(self):
        if self.p < 3 or self.p % 3:
            raise DataError(f"p must be a positive multiple of 3, got {self.p}")
        if not 0.0 < self.c < 1.0:
            raise DataError(f"c must lie in (0, 1), got {self.c}")
        if self.d < 1:
            raise DataError("d must be >= 1")
        if min(self.n1, self.n2) < 2 or self.n_test_per_class < 1:
            raise DataError("need >= 2 training samples per class and >= 1 test sample")
        if self.replications < 1:
            raise DataError("replications must be >= 1")

    @property
    def M(self) -> int:
        cap = default_search_cap(self.p, self.n1 + self.n2)
        return cap if self.search_cap is None else min(self.search_cap, self.p)


@dataclass(frozen=True)
class Loadings:
    a: np.ndarray
    b: np.ndarray
    #: factor group 0, 1 or 2 of every feature
    group: np.ndarray


@dataclass
class ReplicationResult:
    rep: int
    error_curve_t: np.ndarray
    error_curve_oracle: np.ndarray
    fair_m: int
    fair_error: float
    nsc_features: int
    nsc_error: float
    projection_error: float
    seed: tuple = field(default=())


@dataclass
class SimSummary:
    replications: int
    mean_t: np.ndarray
    se_t: Optional[np.ndarray]
    mean_oracle: np.ndarray
    se_oracle: Optional[np.ndarray]
    stats: dict


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def gen_loadings(p: int, rng: np.random.Generator, a_max: float = 0.4, b_max: float = 0.2) -> Loadings:
    if p % 3:
        raise DataError(f"p must be divisible by 3, got {p}")
    a = rng.uniform(0.0, a_max, p)
    b = rng.uniform(0.0, b_max, p)
    group = np.repeat(np.arange(3), p // 3)
    return Loadings(a=a, b=b, group=group)


def gen_mean_vector(p: int, c: float, rng: np.random.Generator) -> np.ndarray:
    """Entries are 0 with probability 1 - c and Laplace(0, 1/2) otherwise."""
    if not 0.0 <= c < 1.0:
        raise DataError(f"c must lie in [0, 1), got {c}")
    signal = rng.random(p) < c
    values = rng.laplace(0.0, 0.5, p)
    return np.where(signal, values, 0.0)


def gen_class_matrix(mu, loadings: Loadings, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n draws of ``mu + eps`` with unit-variance factor-model noise.

    Each sample draws three group factors and one global factor, all
    standardized chi-square(d) variables.
    """
    mu = np.asarray(mu, dtype=np.float64)
    p = mu.shape[0]
    chi = (rng.chisquare(d, size=(n, 4)) - d) / math.sqrt(2.0 * d)
    Z = rng.standard_normal((n, p))
    a, b = loadings.a, loadings.b
    eps = Z + chi[:, loadings.group] * a + chi[:, 3:4] * b
    eps /= np.sqrt(1.0 + a * a + b * b)
    return mu + eps


def gaussian_dataset(mu1, mu2, n1: int, n2: int, rng: np.random.Generator) -> LabeledDataset:
    """Two classes with identity covariance."""
    mu1 = np.asarray(mu1, dtype=np.float64)
    mu2 = np.asarray(mu2, dtype=np.float64)
    X = np.vstack([
        mu1 + rng.standard_normal((n1, mu1.size)),
        mu2 + rng.standard_normal((n2, mu2.size)),
    ])
    y = np.repeat([1, 2], [n1, n2])
    return LabeledDataset(X, y)


def run_replication(cfg: SimConfig, mu1, loadings: Loadings, rep: int) -> ReplicationResult:
    """One training/test draw and every quantity reported per replication."""
    rng = stream(cfg.seed, 2, rep)
    mu1 = np.asarray(mu1, dtype=np.float64)
    mu2 = np.zeros_like(mu1)
    n1, n2, nt = cfg.n1, cfg.n2, cfg.n_test_per_class
    train = LabeledDataset(
        np.vstack([gen_class_matrix(mu1, loadings, n1, cfg.d, rng),
                   gen_class_matrix(mu2, loadings, n2, cfg.d, rng)]),
        np.repeat([1, 2], [n1, n2]),
    )
    test = LabeledDataset(
        np.vstack([gen_class_matrix(mu1, loadings, nt, cfg.d, rng),
                   gen_class_matrix(mu2, loadings, nt, cfg.d, rng)]),
        np.repeat([1, 2], [nt, nt]),
    )
    direction = random_unit_direction(cfg.p, rng)

    s1, s2 = class_summaries(train)
    T = t_statistics(s1, s2)
    var = pooled_diag(s1, s2)
    alpha = s1.means - s2.means
    center = (s1.means + s2.means) / 2.0
    C = (test.features - center) * (alpha / var)

    t_rank = rank_by_abs(T.values)
    o_rank = rank_by_abs(mu1 - mu2)
    curve_t = kernels.nested_error_counts(C[:, t_rank.order], test.labels) / test.n
    curve_o = kernels.nested_error_counts(C[:, o_rank.order], test.labels) / test.n

    lam = lambda_max_curve(train, t_rank, cfg.M)
    m1 = select_m1(T.values[t_rank.order], lam, n1, n2).m_hat

    nsc = tune_shrunken_centroids(train, cfg.nsc_grid)
    proj_err = error_rate(fit_projection(train, direction), test)

    return ReplicationResult(
        rep=rep,
        error_curve_t=curve_t,
        error_curve_oracle=curve_o,
        fair_m=m1,
        fair_error=float(curve_t[m1 - 1]),
        nsc_features=int(nsc.active.size),
        nsc_error=error_rate(nsc, test),
        projection_error=proj_err,
        seed=(cfg.seed, 2, rep),
    )


def fixed_design(cfg: SimConfig):
    """Class-1 mean vector and loadings shared by all replications."""
    mu1 = gen_mean_vector(cfg.p, cfg.c, stream(cfg.seed, 0))
    loadings = gen_loadings(cfg.p, stream(cfg.seed, 1), cfg.a_max, cfg.b_max)
    return mu1, loadings


def run_simulation(cfg: SimConfig, threads: int = 1, reps: Optional[Sequence[int]] = None,
                   progress=None):
    """Run the replications; results come back ordered by replication index."""
    mu1, loadings = fixed_design(cfg)
    reps = list(range(cfg.replications)) if reps is None else list(reps)

    def job(r):
        res = run_replication(cfg, mu1, loadings, r)
        if progress is not None:
            progress(res)
        return res

    if threads <= 1:
        results = [job(r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, reps))
    return mu1, loadings, results


def _mean_sd(x):
    x = np.asarray(x, dtype=np.float64)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else None
    return float(np.mean(x)), sd


def aggregate(results: Sequence[ReplicationResult]) -> SimSummary:
    """Per-m mean and standard-error curves plus scalar summaries.

    Standard errors are ``sd / sqrt(R)``; with a single replication they
    are reported as ``None``.
    """
    if not results:
        raise ValueError("no replications to aggregate")
    results = sorted(results, key=lambda r: r.rep)
    R = len(results)
    Et = np.vstack([r.error_curve_t for r in results])
    Eo = np.vstack([r.error_curve_oracle for r in results])

    def se(E):
        return E.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else None

    stats = {}
    for name in ("fair_m", "fair_error", "nsc_features", "nsc_error", "projection_error"):
        mean, sd = _mean_sd([getattr(r, name) for r in results])
        stats[f"{name}_mean"] = mean
        stats[f"{name}_sd"] = sd
    mt, mo = Et.mean(axis=0), Eo.mean(axis=0)
    stats["full_error_mean"] = float(mt[-1])
    stats["min_mean_error_t"] = float(mt.min())
    stats["argmin_mean_error_t"] = int(np.argmin(mt)) + 1
    stats["min_mean_error_oracle"] = float(mo.min())
    stats["argmin_mean_error_oracle"] = int(np.argmin(mo)) + 1
    return SimSummary(R, mt, se(Et), mo, se(Eo), stats)


def theorem3_property_trial(
    p: int,
    s: int,
    gamma_exp: float,
    beta: float,
    n1: int,
    n2: int,
    rng: np.random.Generator,
    *,
    c: float = 1.0,
    floor: Optional[float] = None,
    threshold: Optional[float] = None,
) -> bool:
    """Does the threshold ``x`` separate the s signal features by |T|?

    Gaussian data with unit variances; the first ``s`` features carry the
    mean difference ``floor`` (default ``n^-gamma * beta * sqrt(2)`` with
    n = n1 + n2), the rest none.  ``x`` defaults to ``c * n^(gamma/2)``.
    Returns True iff ``min_{j<s} |T_j| >= x`` and ``max_{j>=s} |T_j| < x``.
    """
    if not 0 <= s < p:
        raise DataError("need 0 <= s < p")
    n = n1 + n2
    if floor is None:
        floor = n ** (-gamma_exp) * beta * math.sqrt(2.0)
    x = c * n ** (gamma_exp / 2.0) if threshold is None else threshold
    mu1 = np.zeros(p)
    mu1[:s] = floor
    ds = gaussian_dataset(mu1, np.zeros(p), n1, n2, rng)
    T = np.abs(t_statistics(*class_summaries(ds)).values)
    signal_ok = s == 0 or T[:s].min() >= x
    return bool(signal_ok and T[s:].max() < x)


def config_dict(cfg: SimConfig) -> dict:
    return asdict(cfg)
