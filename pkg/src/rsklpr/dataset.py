"""Training data container, CSV ingestion and nearest-neighbor queries."""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rsklpr import _accel
from rsklpr.errors import DataError


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DataSet:
    """Immutable sample of ``T`` (predictor, response) pairs.

    ``predictors`` has shape (T, d) and ``responses`` shape (T,). One-dimensional
    predictor input is promoted to a single column.
    """

    predictors: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.predictors, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.responses, dtype=np.float64).reshape(-1)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DataError(f"predictors must be a (T, d) matrix, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} predictor rows but {y.shape[0]} responses")
        if X.shape[0] < 1:
            raise DataError("data set must contain at least one row")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DataError("predictors and responses must be finite")
        object.__setattr__(self, "predictors", _frozen(X))
        object.__setattr__(self, "responses", _frozen(y))

    @property
    def T(self) -> int:
        return self.responses.shape[0]

    @property
    def d(self) -> int:
        return self.predictors.shape[1]

    def __len__(self):
        return self.T

    def subset(self, indices) -> "DataSet":
        idx = np.asarray(indices, dtype=np.intp)
        return DataSet(self.predictors[idx], self.responses[idx])


@dataclass(frozen=True, eq=False)
class Neighborhood:
    """The ``N`` nearest training points of a query point ``center``."""

    center: np.ndarray
    indices: np.ndarray
    raw_distances: np.ndarray
    normalized_distances: np.ndarray
    degenerate: bool

    @property
    def N(self) -> int:
        return self.indices.shape[0]


def load_csv(path) -> DataSet:
    """Read a ``x1,...,xd,y`` CSV file into a :class:`DataSet`."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        d = len(header) - 1
        expected = [f"x{j}" for j in range(1, d + 1)] + ["y"]
        if d < 1 or header != expected:
            raise DataError(f"{path}: header must be {','.join(expected) if d >= 1 else 'x1,...,xd,y'}, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != d + 1:
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {d + 1}")
            values = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {lineno}, column {col}: not a number: {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {lineno}, column {col}: non-finite value {cell!r}")
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    return DataSet(arr[:, :d], arr[:, d])


def save_csv(path, data: DataSet):
    header = [f"x{j}" for j in range(1, data.d + 1)] + ["y"]
    write_table(path, header, np.column_stack([data.predictors, data.responses]))


def write_table(path, header, table):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.asarray(table):
            w.writerow([repr(float(v)) for v in row])


def normalize_distances(nbr: Neighborhood) -> Neighborhood:
    """Scale neighborhood distances to [0, 1] by their maximum.

    A neighborhood whose points all coincide with the center gets zeros and
    ``degenerate=True``.
    """
    raw = np.asarray(nbr.raw_distances, dtype=np.float64)
    top = raw.max() if raw.size else 0.0
    if top > 0:
        normed = raw / top
        degenerate = False
    else:
        normed = np.zeros_like(raw)
        degenerate = True
    normed.setflags(write=False)
    return Neighborhood(nbr.center, nbr.indices, nbr.raw_distances, normed, degenerate)


def knn(data: DataSet, x, n_neighbors: int) -> Neighborhood:
    """Brute-force ``n_neighbors`` nearest points to ``x`` (Euclidean, predictors only).

    Ties are broken in favour of the lower dataset index.
    """
    n_neighbors = int(n_neighbors)
    if n_neighbors < 1:
        raise ValueError(f"n_neighbors must be >= 1, got {n_neighbors}")
    if n_neighbors > data.T:
        raise ValueError(f"n_neighbors={n_neighbors} exceeds data size T={data.T}")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != data.d:
        raise ValueError(f"query has dimension {x.shape[0]}, data has d={data.d}")
    if not np.isfinite(x).all():
        raise ValueError("query point must be finite")
    sq = _accel.sq_distances(data.predictors, x)
    if n_neighbors < data.T:
        # partition first, then a stable ordering on (distance, index)
        kth = np.partition(sq, n_neighbors - 1)[n_neighbors - 1]
        cand = np.flatnonzero(sq <= kth)
        order = cand[np.lexsort((cand, sq[cand]))][:n_neighbors]
    else:
        order = np.lexsort((np.arange(data.T), sq))
    order = order.astype(np.intp)
    raw = np.sqrt(sq[order])
    x.setflags(write=False)
    order.setflags(write=False)
    raw.setflags(write=False)
    return normalize_distances(Neighborhood(x, order, raw, raw, False))
