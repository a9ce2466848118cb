"""Weighted local polynomial fits and the three estimators built on them."""

from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy.linalg import solve_triangular

from rsklpr.dataset import DataSet, Neighborhood, knn
from rsklpr.errors import NumericalError
from rsklpr.kernels import DISTANCE_KERNELS, BandwidthSpec, k1_eval
from rsklpr.similarity import K2_VARIANTS, WeightVector, robust_weights

METHODS = ("rsklpr", "lpr", "robust_lowess")

# condition number of the column-equilibrated weighted design
COND_FLAG = 1e6
COND_RIDGE = 1e8
RIDGE_JITTER = 1e-10
# median |residual| below this fraction of mean |y| counts as a perfect fit
LOWESS_RESID_FLOOR = 1e-7


@dataclass(frozen=True, eq=False)
class PolyFit:
    """Local polynomial coefficients at ``center``; ``coefficients[0]`` is the fit there."""

    center: np.ndarray
    degree: int
    coefficients: np.ndarray
    condition_flag: bool = False

    @property
    def value(self) -> float:
        return float(self.coefficients[0])


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "rsklpr"
    neighbors: int = 50
    degree: int = 1
    k1: Optional[str] = None
    k2: str = "conditional"
    bandwidth: BandwidthSpec = field(default_factory=BandwidthSpec)
    robust_iterations: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.neighbors < 1:
            raise ValueError("neighbors must be >= 1")
        if self.degree not in (0, 1, 2):
            raise ValueError("degree must be 0, 1 or 2")
        if self.k2 not in K2_VARIANTS:
            raise ValueError(f"unknown K2 variant {self.k2!r}")
        if self.k1 is None:
            object.__setattr__(self, "k1", "tricube" if self.method == "robust_lowess" else "laplacian")
        if self.k1 not in DISTANCE_KERNELS:
            raise ValueError(f"unknown distance kernel {self.k1!r}")
        if self.method == "rsklpr" and self.k2 == "none":
            raise ValueError("method 'rsklpr' needs k2 'conditional' or 'joint'")
        if self.method in ("lpr", "robust_lowess"):
            object.__setattr__(self, "k2", "none")
        if self.method == "robust_lowess":
            if self.robust_iterations < 1:
                raise ValueError("robust_lowess needs robust_iterations >= 1")
            if self.degree != 1:
                raise ValueError("robust_lowess is local linear only")


def design_matrix(offsets: np.ndarray, degree: int) -> np.ndarray:
    """Regressors centered at the query; ``offsets`` is (N, d) of X_i - x."""
    n, d = offsets.shape
    if degree == 0:
        return np.ones((n, 1))
    if degree == 1:
        return np.column_stack([np.ones(n), offsets])
    if d != 1:
        raise ValueError("degree 2 is supported for one predictor only")
    u = offsets[:, 0]
    return np.column_stack([np.ones(n), u, u * u])


def _weighted_solve(V, y, w):
    """Return (beta, flagged) or None when the weighted design is rank deficient."""
    pos = w > 0
    ncol = V.shape[1]
    if pos.sum() < ncol:
        return None
    sw = np.sqrt(w[pos])
    A = V[pos] * sw[:, None]
    b = y[pos] * sw
    scale = np.linalg.norm(A, axis=0)
    if not np.all(scale > 0):
        return None
    A = A / scale
    Q, R = np.linalg.qr(A)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[-1] <= sv[0] * max(A.shape) * np.finfo(float).eps:
        return None
    cond = sv[0] / sv[-1]
    if cond <= COND_RIDGE:
        beta = solve_triangular(R, Q.T @ b)
    else:
        M = A.T @ A
        M[np.diag_indices(ncol)] += RIDGE_JITTER * np.trace(M)
        beta = np.linalg.solve(M, A.T @ b)
    return beta / scale, cond > COND_FLAG


def wls_polyfit(
    x,
    nbr: Neighborhood,
    data: DataSet,
    weights: Union[WeightVector, np.ndarray],
    degree: int = 1,
) -> PolyFit:
    """Weighted least-squares polynomial in (X_i - x) over the neighborhood.

    Solved by QR on the column-equilibrated weighted design. Near-singular
    systems get a small ridge; singular ones fall back to a lower degree. Either
    case sets ``condition_flag``.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    w = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, dtype=np.float64)
    if w.shape != (nbr.N,):
        raise ValueError(f"expected {nbr.N} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    offsets = data.predictors[nbr.indices] - x
    y = data.responses[nbr.indices]
    reduced = False
    for p in range(degree, -1, -1):
        out = _weighted_solve(design_matrix(offsets, p), y, w)
        if out is not None:
            beta, flagged = out
            if not np.all(np.isfinite(beta)):
                break
            return PolyFit(x, p, beta, flagged or reduced)
        reduced = True
    raise NumericalError(f"weighted design at x={x.tolist()} is singular at every degree")


def _as_queries(queries, d):
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim == 1:
        q = q.reshape(-1, d) if d > 1 else q[:, None]
    if q.shape[1] != d:
        raise ValueError(f"queries have dimension {q.shape[1]}, data has d={d}")
    return q


def estimate(config: EstimatorConfig, data: DataSet, queries) -> List[PolyFit]:
    """Fit the configured estimator at every query point, one pass per query."""
    q = _as_queries(queries, data.d)
    if config.neighbors > data.T:
        raise ValueError(f"neighbors={config.neighbors} exceeds data size T={data.T}")
    if config.method == "robust_lowess":
        return _robust_lowess_fits(data, config.neighbors, config.robust_iterations, q, config.k1)
    fits = []
    for x in q:
        nbr = knn(data, x, config.neighbors)
        w = robust_weights(nbr, data, config.k2, config.k1, config.bandwidth)
        fits.append(wls_polyfit(x, nbr, data, w, config.degree))
    return fits


def predict(config: EstimatorConfig, data: DataSet, queries) -> np.ndarray:
    return np.array([f.value for f in estimate(config, data, queries)])


def bisquare(r: np.ndarray, s: float) -> np.ndarray:
    """Robustness factors (1 - (r / 6s)^2)^2, zero beyond 6s."""
    z = np.asarray(r, dtype=np.float64) / (6.0 * s)
    return np.where(np.abs(z) < 1.0, (1.0 - z * z) ** 2, 0.0)


def _lowess_pass(data, nbrs, k1s, delta):
    fits = np.empty(len(nbrs))
    for i, (nbr, k1w) in enumerate(zip(nbrs, k1s)):
        w = k1w * delta[nbr.indices]
        if not w.any():
            w = k1w
        fits[i] = wls_polyfit(nbr.center, nbr, data, w, 1).value
    return fits


def _k1_weights(nbr, kernel):
    if nbr.degenerate:
        return np.ones(nbr.N)
    w = np.asarray(k1_eval(kernel, nbr.normalized_distances), dtype=np.float64).reshape(-1)
    return w if w.any() else np.ones(nbr.N)


def lowess_robustness(data: DataSet, neighbors: int, iterations: int, k1: str = "tricube"):
    """Run the bisquare reweighting loop on the training points.

    Returns the final robustness factors and the number of reweighting passes
    actually run (fewer than ``iterations`` if the residuals vanish).
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    delta = np.ones(data.T)
    if iterations == 0:
        return delta, 0
    nbrs = [knn(data, x, neighbors) for x in data.predictors]
    k1s = [_k1_weights(nbr, k1) for nbr in nbrs]
    floor = LOWESS_RESID_FLOOR * np.mean(np.abs(data.responses))
    done = 0
    for _ in range(iterations):
        resid = data.responses - _lowess_pass(data, nbrs, k1s, delta)
        s = np.median(np.abs(resid))
        if not s > floor:
            break
        delta = bisquare(resid, s)
        done += 1
    return delta, done


def _robust_lowess_fits(data, neighbors, iterations, q, k1):
    delta, _ = lowess_robustness(data, neighbors, iterations, k1)
    fits = []
    for x in q:
        nbr = knn(data, x, neighbors)
        k1w = _k1_weights(nbr, k1)
        w = k1w * delta[nbr.indices]
        if not w.any():
            w = k1w
        fits.append(wls_polyfit(x, nbr, data, w, 1))
    return fits


def robust_lowess(data: DataSet, neighbors: int, iterations: int, queries, k1: str = "tricube") -> np.ndarray:
    """Classical robust LOWESS: local linear fits with bisquare reweighting.

    Iteration 0 is plain local linear regression with the ``k1`` kernel.
    """
    q = _as_queries(queries, data.d)
    return np.array([f.value for f in _robust_lowess_fits(data, neighbors, iterations, q, k1)])
