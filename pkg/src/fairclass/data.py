"""Two-class datasets: CSV/TSV ingestion, per-sample standardization and
stratified train/test splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "LabeledDataset",
    "SplitSpec",
    "load_matrix",
    "write_matrix",
    "standardize_samples",
    "stratified_split",
]


@dataclass(frozen=True)
class LabeledDataset:
    """Dense n x p feature matrix with class tags in {1, 2}.

    The arrays are copied and made read-only at construction.
    ``class_names`` records the original label strings for classes 1 and 2.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: Optional[tuple] = None
    sample_ids: Optional[tuple] = None
    class_names: tuple = ("1", "2")

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.array(self.labels, dtype=np.int64, copy=True).ravel()
        if X.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        n, p = X.shape
        if y.shape[0] != n:
            raise DataError(f"labels: expected {n} entries, got {y.shape[0]}")
        if n < 4 or p < 1:
            raise DataError(f"need n >= 4 and p >= 1, got n={n}, p={p}")
        if not np.isin(y, (1, 2)).all():
            raise DataError("labels must be 1 or 2")
        for k in (1, 2):
            if np.count_nonzero(y == k) < 2:
                raise DataError(f"class {k} has fewer than 2 samples")
        if not np.isfinite(X).all():
            raise DataError("features contain non-finite values")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != p:
                raise DataError("feature_names length does not match p")
            object.__setattr__(self, "feature_names", names)
        if self.sample_ids is not None:
            ids = tuple(str(s) for s in self.sample_ids)
            if len(ids) != n:
                raise DataError("sample_ids length does not match n")
            object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n2(self) -> int:
        return int(np.count_nonzero(self.labels == 2))

    def class_rows(self, k: int) -> np.ndarray:
        return self.features[self.labels == k]

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows)
        return LabeledDataset(
            self.features[rows],
            self.labels[rows],
            feature_names=self.feature_names,
            sample_ids=None if self.sample_ids is None else tuple(self.sample_ids[i] for i in rows),
            class_names=self.class_names,
        )

    def with_features(self, X) -> "LabeledDataset":
        return LabeledDataset(
            X, self.labels, self.feature_names, self.sample_ids, self.class_names
        )

    def swapped(self) -> "LabeledDataset":
        """Same data with class tags 1 and 2 exchanged."""
        return LabeledDataset(
            self.features,
            3 - self.labels,
            self.feature_names,
            self.sample_ids,
            self.class_names[::-1],
        )


@dataclass(frozen=True)
class SplitSpec:
    gamma: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise DataError(f"gamma must lie in (0, 1), got {self.gamma}")


def _sniff_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def _to_float(cell: str, where: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"non-numeric cell {cell!r} at {where}") from None
    if not math.isfinite(v):
        raise DataError(f"missing or non-finite value {cell!r} at {where}")
    return v


def _encode_labels(raw: Sequence[str]):
    names = list(dict.fromkeys(raw))
    if len(names) != 2:
        raise DataError(f"expected exactly two classes, found {len(names)}: {names[:5]}")
    y = np.array([1 if v == names[0] else 2 for v in raw], dtype=np.int64)
    for k, name in zip((1, 2), names):
        if np.count_nonzero(y == k) < 2:
            raise DataError(f"class {name!r} has fewer than 2 samples")
    return y, tuple(names)


def load_matrix(
    path,
    orientation: str = "rows",
    label: str = "label",
    id_field: Optional[str] = "sample_id",
) -> LabeledDataset:
    """Read a delimited numeric table with a header row.

    Parameters
    ----------
    path : str or Path
        CSV or TSV file; the delimiter is taken from the header line.
    orientation : {"rows", "columns"}
        ``"rows"``: one sample per row, ``label`` names the label column and
        ``id_field`` (if present in the header) the sample-id column.
        ``"columns"``: one sample per column; the first column holds row
        names, the header holds sample ids and the row named ``label``
        holds the class tags.
    label : str
        Name of the label column or row.

    Returns
    -------
    LabeledDataset
        The first label value seen becomes class 1.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise DataError(f"{path}: empty file or missing header")
        fh.seek(0)
        reader = csv.reader(fh, delimiter=_sniff_delimiter(first))
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    header = [h.strip() for h in rows[0]]
    body = [[c.strip() for c in r] for r in rows[1:]]
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise DataError(
                f"{path}: line {i + 2} has {len(r)} fields, header has {len(header)}"
            )

    if orientation == "rows":
        if label not in header:
            raise DataError(f"{path}: no label column {label!r}")
        li = header.index(label)
        ii = header.index(id_field) if id_field and id_field in header else None
        fcols = [j for j in range(len(header)) if j not in (li, ii)]
        if not fcols:
            raise DataError(f"{path}: no feature columns")
        X = np.array(
            [[_to_float(r[j], f"line {i + 2}, column {header[j]!r}") for j in fcols]
             for i, r in enumerate(body)],
            dtype=np.float64,
        ).reshape(len(body), len(fcols))
        y, classes = _encode_labels([r[li] for r in body])
        ids = tuple(r[ii] for r in body) if ii is not None else None
        names = tuple(header[j] for j in fcols)
    elif orientation == "columns":
        rownames = [r[0] for r in body]
        if label not in rownames:
            raise DataError(f"{path}: no label row {label!r}")
        li = rownames.index(label)
        y, classes = _encode_labels(body[li][1:])
        frows = [r for i, r in enumerate(body) if i != li]
        if not frows:
            raise DataError(f"{path}: no feature rows")
        X = np.array(
            [[_to_float(c, f"row {r[0]!r}, column {header[j + 1]!r}") for j, c in enumerate(r[1:])]
             for r in frows],
            dtype=np.float64,
        ).T
        ids = tuple(header[1:])
        names = tuple(r[0] for r in frows)
    else:
        raise DataError(f"orientation must be 'rows' or 'columns', got {orientation!r}")
    return LabeledDataset(X, y, feature_names=names, sample_ids=ids, class_names=classes)


def write_matrix(ds: LabeledDataset, path, delimiter: str = ",", label: str = "label") -> None:
    """Write ``ds`` samples-in-rows so that :func:`load_matrix` reads it back.

    Values are written with ``repr`` precision, so the round trip is exact.
    """
    names = ds.feature_names or tuple(f"f{j + 1}" for j in range(ds.p))
    ids = ds.sample_ids or tuple(f"s{i + 1}" for i in range(ds.n))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["sample_id", label, *names])
        for i in range(ds.n):
            w.writerow(
                [ids[i], ds.class_names[ds.labels[i] - 1], *(repr(float(v)) for v in ds.features[i])]
            )


def standardize_samples(ds: LabeledDataset) -> LabeledDataset:
    """Center each sample to mean 0 and scale it to unit variance (ddof=1)
    across its features."""
    if ds.p < 2:
        raise DataError("per-sample standardization needs p >= 2")
    X = ds.features
    mean = X.mean(axis=1, keepdims=True)
    sd = X.std(axis=1, ddof=1, keepdims=True)
    bad = np.flatnonzero(sd[:, 0] == 0.0)
    if bad.size:
        i = int(bad[0])
        name = ds.sample_ids[i] if ds.sample_ids else f"#{i + 1}"
        raise DataError(f"constant sample {name}: zero spread across features")
    return ds.with_features((X - mean) / sd)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: LabeledDataset, spec: SplitSpec):
    """Split each class so that ``round(gamma * n_k)`` samples train.

    A class's members are permuted with the seeded generator; for
    ``gamma <= 0.5`` the training part is the head of the permutation,
    otherwise the test part is.  This makes the splits for ``gamma`` and
    ``1 - gamma`` (same seed) exact role swaps whenever neither
    ``gamma * n_k`` is a half-integer.
    """
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    for k in (1, 2):
        idx = np.flatnonzero(ds.labels == k)
        nk = idx.size
        n_train = _round_half_up(spec.gamma * nk)
        if n_train < 2:
            raise DataError(f"class {k}: only {n_train} training samples at gamma={spec.gamma}")
        if nk - n_train < 1:
            raise DataError(f"class {k}: no test samples at gamma={spec.gamma}")
        perm = idx[rng.permutation(nk)]
        if spec.gamma <= 0.5:
            train.append(perm[:n_train])
            test.append(perm[n_train:])
        else:
            test.append(perm[: nk - n_train])
            train.append(perm[nk - n_train:])
    tr = np.sort(np.concatenate(train))
    te = np.sort(np.concatenate(test))
    return ds.subset(tr), ds.subset(te)
