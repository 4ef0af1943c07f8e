"""Linear diagonal classifiers sharing one representation.

Every fitted rule scores a vector as ``sum_j w_j (x_j - c_j)`` over its
active features and predicts class 1 iff the score is strictly positive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .data import LabeledDataset
from .errors import DataError
from .stats import (
    FeatureRanking,
    class_summaries,
    pooled_diag,
    rank_by_abs,
    t_statistics,
)

__all__ = [
    "LinearIndependenceModel",
    "ProjectionDirection",
    "ByCount",
    "ByThreshold",
    "EmptyModelWarning",
    "fit_independence",
    "fit_truncated_nc",
    "fit_fair",
    "fit_oracle",
    "random_unit_direction",
    "fit_projection",
    "fit_shrunken_centroids",
    "tune_shrunken_centroids",
    "predict",
    "score",
    "error_rate",
    "nested_error_curve",
    "save_model",
    "load_model",
]

KINDS = ("independence", "truncated_nc", "fair", "oracle", "projection", "shrunken_centroids")


class EmptyModelWarning(UserWarning):
    """A selection rule kept no features; the model scores 0 everywhere."""


@dataclass(frozen=True)
class LinearIndependenceModel:
    p: int
    active: np.ndarray
    weights: np.ndarray
    centers: np.ndarray
    kind: str
    n1: int
    n2: int
    threshold: Optional[float] = None
    count: Optional[int] = None
    flags: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        active = np.asarray(self.active, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        c = np.asarray(self.centers, dtype=np.float64)
        if not (active.shape == w.shape == c.shape):
            raise ValueError("active, weights and centers must have equal length")
        if active.size and (active.min() < 0 or active.max() >= self.p):
            raise ValueError("active index out of range")
        if not (np.isfinite(w).all() and np.isfinite(c).all()):
            raise ValueError("non-finite weight or center")
        for name, a in (("active", active), ("weights", w), ("centers", c)):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def is_empty(self) -> bool:
        return self.active.size == 0

    def decision_function(self, X) -> np.ndarray:
        """Scores of the rows of ``X`` (or of a single vector)."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.p:
            raise DataError(f"expected {self.p} features, got {X.shape[-1]}")
        return (X[..., self.active] - self.centers) @ self.weights

    def contributions(self, X) -> np.ndarray:
        """Per-feature score terms ``w_j (x_j - c_j)``, one column per
        active feature."""
        X = np.asarray(X, dtype=np.float64)
        return (X[..., self.active] - self.centers) * self.weights


@dataclass(frozen=True)
class ProjectionDirection:
    a: np.ndarray
    seed: Optional[int] = None


@dataclass(frozen=True)
class ByCount:
    m: int


@dataclass(frozen=True)
class ByThreshold:
    b: float


@dataclass(frozen=True)
class _Fitted:
    alpha: np.ndarray
    center: np.ndarray
    var: np.ndarray
    n1: int
    n2: int
    flags: tuple = field(default=())


def _plugin(ds: LabeledDataset) -> _Fitted:
    s1, s2 = class_summaries(ds)
    var, floored = pooled_diag(s1, s2, return_flags=True)
    flags = ("floored_variance",) if floored.any() else ()
    return _Fitted(
        alpha=s1.means - s2.means,
        center=(s1.means + s2.means) / 2.0,
        var=var,
        n1=s1.n,
        n2=s2.n,
        flags=flags,
    )


def _model(ds, fit: _Fitted, active, weights, kind, threshold=None, count=None, flags=()):
    active = np.asarray(active, dtype=np.int64)
    flags = tuple(fit.flags) + tuple(flags)
    if active.size == 0:
        warnings.warn(f"{kind}: no features selected; model predicts class 2 everywhere",
                      EmptyModelWarning, stacklevel=3)
        flags += ("empty",)
    return LinearIndependenceModel(
        p=ds.p,
        active=active,
        weights=np.asarray(weights, dtype=np.float64),
        centers=fit.center[active],
        kind=kind,
        n1=fit.n1,
        n2=fit.n2,
        threshold=threshold,
        count=count,
        flags=flags,
    )


def fit_independence(ds: LabeledDataset) -> LinearIndependenceModel:
    """Plug-in independence rule on all features."""
    f = _plugin(ds)
    return _model(ds, f, np.arange(ds.p), f.alpha / f.var, "independence")


def fit_truncated_nc(ds: LabeledDataset, ranking: FeatureRanking, m: int) -> LinearIndependenceModel:
    """Nearest-centroid rule on the first ``m`` ranked features, without
    variance scaling."""
    if not 1 <= m <= ds.p:
        raise DataError(f"m must lie in [1, {ds.p}], got {m}")
    f = _plugin(ds)
    act = ranking.order[:m]
    return _model(ds, f, act, f.alpha[act], "truncated_nc", count=m)


def fair_scale(n1: int, n2: int) -> float:
    """Factor turning |T_j| into the thresholded statistic sqrt(n/(n1 n2))|T_j|."""
    return float(np.sqrt((n1 + n2) / (n1 * n2)))


def fit_fair(ds: LabeledDataset, select) -> LinearIndependenceModel:
    """Features annealed independence rule.

    ``select`` is :class:`ByCount` (top-m features by |T|) or
    :class:`ByThreshold` (features with ``sqrt(n/(n1 n2)) |T_j| > b``).
    Weights are ``alpha_hat_j / sigma_hat_j^2``.
    """
    s1, s2 = class_summaries(ds)
    f = _plugin(ds)
    T = t_statistics(s1, s2)
    if isinstance(select, ByCount):
        m = int(select.m)
        if not 1 <= m <= ds.p:
            raise DataError(f"m must lie in [1, {ds.p}], got {m}")
        act = rank_by_abs(T.values).order[:m]
        thr, cnt = None, m
    elif isinstance(select, ByThreshold):
        b = float(select.b)
        act = np.flatnonzero(fair_scale(f.n1, f.n2) * np.abs(T.values) > b)
        # keep the ranked order so contributions line up with the t-ordering
        act = act[np.argsort(-np.abs(T.values[act]), kind="stable")]
        thr, cnt = b, int(act.size)
    else:
        raise TypeError("select must be ByCount or ByThreshold")
    flags = ("capped_t",) if T.capped[act].any() else ()
    return _model(ds, f, act, f.alpha[act] / f.var[act], "fair", threshold=thr, count=cnt, flags=flags)


def fit_oracle(ds: LabeledDataset, true_alpha, a: float) -> LinearIndependenceModel:
    """Unit-variance rule on the features whose true mean difference
    exceeds ``a`` in magnitude."""
    true_alpha = np.asarray(true_alpha, dtype=np.float64)
    if true_alpha.shape != (ds.p,):
        raise DataError("true_alpha must have one entry per feature")
    f = _plugin(ds)
    act = np.flatnonzero(np.abs(true_alpha) > a)
    return _model(ds, f, act, f.alpha[act], "oracle", threshold=float(a), count=int(act.size))


def random_unit_direction(p: int, seed) -> ProjectionDirection:
    """Uniform direction on the unit sphere, as a normalized Gaussian vector."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = np.random.default_rng(seed)
    while True:
        z = rng.standard_normal(p)
        nz = np.linalg.norm(z)
        if nz > 0:
            break
    return ProjectionDirection(a=z / nz, seed=seed if isinstance(seed, int) else None)


def fit_projection(ds: LabeledDataset, direction: ProjectionDirection) -> LinearIndependenceModel:
    """Classifier that projects onto ``direction`` and compares with the
    projected midpoint."""
    a = np.asarray(direction.a, dtype=np.float64)
    if a.shape != (ds.p,):
        raise DataError(f"direction has dimension {a.shape}, data has p={ds.p}")
    f = _plugin(ds)
    return _model(ds, f, np.arange(ds.p), a * float(a @ f.alpha), "projection")


def fit_shrunken_centroids(ds: LabeledDataset, delta: float) -> LinearIndependenceModel:
    """Soft-thresholded standardized centroid differences (simplified
    nearest-shrunken-centroid baseline)."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    f = _plugin(ds)
    sd = np.sqrt(f.var)
    d = f.alpha / sd
    shrunk = np.sign(d) * np.maximum(np.abs(d) - delta, 0.0)
    act = np.flatnonzero(shrunk != 0)
    return _model(ds, f, act, shrunk[act] / sd[act], "shrunken_centroids", threshold=float(delta),
                  count=int(act.size))


def tune_shrunken_centroids(ds: LabeledDataset, grid: int = 30) -> LinearIndependenceModel:
    """Shrunken-centroid baseline with the shrinkage chosen on a grid of
    ``grid`` values in ``[0, max |d_j|)`` by training error, ties going to
    the largest shrinkage."""
    f = _plugin(ds)
    top = float(np.abs(f.alpha / np.sqrt(f.var)).max())
    best = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyModelWarning)
        for delta in np.linspace(0.0, top, grid + 1)[:-1]:
            model = fit_shrunken_centroids(ds, float(delta))
            err = error_rate(model, ds)
            if best is None or err <= best[0]:
                best = (err, model)
    return best[1]


def score(model: LinearIndependenceModel, x) -> float:
    return float(model.decision_function(np.asarray(x, dtype=np.float64).reshape(-1)))


def predict(model: LinearIndependenceModel, x):
    """Class 1 iff the score is > 0, class 2 otherwise (ties go to 2).

    Accepts one vector or a matrix of row vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise DataError("input contains non-finite values")
    s = model.decision_function(x)
    out = np.where(s > 0.0, 1, 2)
    return int(out) if out.ndim == 0 else out


def error_rate(model: LinearIndependenceModel, test: LabeledDataset) -> float:
    pred = predict(model, test.features)
    return float(np.count_nonzero(pred != test.labels)) / test.n


def nested_error_curve(ds: LabeledDataset, test: LabeledDataset, order, weights=None) -> np.ndarray:
    """Test error of the rule truncated to the first m features of ``order``,
    for every m = 1..len(order), in one pass over the test set.

    ``weights`` defaults to ``alpha_hat / sigma_hat^2`` (the FAIR weights);
    pass ``alpha_hat`` for the unit-variance truncated rule.
    """
    f = _plugin(ds)
    order = np.asarray(order, dtype=np.int64)
    w = f.alpha / f.var if weights is None else np.asarray(weights, dtype=np.float64)
    C = (test.features[:, order] - f.center[order]) * w[order]
    return kernels.nested_error_counts(C, test.labels) / test.n


def save_model(model: LinearIndependenceModel, path) -> None:
    """TSV with a ``key=value`` preamble and rows ``feature_index, weight,
    center`` (1-based feature indices)."""
    lines = [
        f"meta={model.kind}",
        f"p={model.p}",
        f"n1={model.n1}",
        f"n2={model.n2}",
        f"threshold={'' if model.threshold is None else repr(model.threshold)}",
        f"count={'' if model.count is None else model.count}",
        f"flags={','.join(model.flags)}",
        "feature_index\tweight\tcenter",
    ]
    for j, w, c in zip(model.active, model.weights, model.centers):
        lines.append(f"{j + 1}\t{float(w)!r}\t{float(c)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> LinearIndependenceModel:
    meta = {}
    idx, w, c = [], [], []
    header_seen = False
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if not header_seen:
            if line.startswith("feature_index"):
                header_seen = True
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataError(f"{path}: malformed preamble line {line!r}")
            meta[key.strip()] = value.strip()
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}: malformed model row {line!r}")
        idx.append(int(parts[0]) - 1)
        w.append(float(parts[1]))
        c.append(float(parts[2]))
    if not header_seen:
        raise DataError(f"{path}: missing feature_index header")
    try:
        return LinearIndependenceModel(
            p=int(meta["p"]),
            active=np.array(idx, dtype=np.int64),
            weights=np.array(w),
            centers=np.array(c),
            kind=meta["meta"],
            n1=int(meta["n1"]),
            n2=int(meta["n2"]),
            threshold=float(meta["threshold"]) if meta.get("threshold") else None,
            count=int(meta["count"]) if meta.get("count") else None,
            flags=tuple(s for s in meta.get("flags", "").split(",") if s),
        )
    except KeyError as e:
        raise DataError(f"{path}: missing preamble key {e.args[0]}") from None
