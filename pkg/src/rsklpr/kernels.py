"""Distance kernels, factorized Gaussian KDE and bandwidth rules."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from rsklpr import _accel
from rsklpr.errors import NumericalError

DISTANCE_KERNELS = ("laplacian", "gaussian", "epanechnikov", "tricube", "uniform")
BANDWIDTH_RULES = ("scott", "silverman", "fixed", "cv_grid")


def k1_eval(kernel: str, u):
    """Un-normalized distance kernel evaluated at normalized distance(s) ``u`` in [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(~np.isfinite(u)) or np.any(u < 0) or np.any(u > 1):
        raise ValueError("normalized distance must lie in [0, 1]")
    if kernel == "laplacian":
        out = np.exp(-u)
    elif kernel == "gaussian":
        out = np.exp(-0.5 * u * u)
    elif kernel == "epanechnikov":
        out = np.maximum(0.0, 1.0 - u * u)
    elif kernel == "tricube":
        out = np.maximum(0.0, 1.0 - u**3) ** 3
    elif kernel == "uniform":
        out = np.ones_like(u)
    else:
        raise ValueError(f"unknown distance kernel {kernel!r}; expected one of {DISTANCE_KERNELS}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BandwidthSpec:
    """How KDE bandwidths are chosen.

    ``cv_grid`` holds multipliers applied to the Scott baseline.
    """

    rule: str = "scott"
    fixed_values: Optional[Sequence[float]] = None
    cv_grid: Optional[Sequence[float]] = None
    cv_folds: int = 5

    def __post_init__(self):
        if self.rule not in BANDWIDTH_RULES:
            raise ValueError(f"unknown bandwidth rule {self.rule!r}; expected one of {BANDWIDTH_RULES}")
        if self.rule == "fixed":
            if self.fixed_values is None or len(self.fixed_values) == 0:
                raise ValueError("rule 'fixed' requires fixed_values")
            if any(not (v > 0) for v in self.fixed_values):
                raise ValueError("fixed bandwidths must be strictly positive")
            object.__setattr__(self, "fixed_values", tuple(float(v) for v in self.fixed_values))
        if self.rule == "cv_grid":
            if not self.cv_grid:
                raise ValueError("rule 'cv_grid' requires a non-empty cv_grid")
            if any(not (m > 0) for m in self.cv_grid):
                raise ValueError("cv_grid multipliers must be strictly positive")
            object.__setattr__(self, "cv_grid", tuple(float(m) for m in self.cv_grid))
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")


def _as_samples(samples):
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None]
    return s


def _checked_std(samples):
    n = samples.shape[0]
    if n < 2:
        raise ValueError(f"data-driven bandwidth rules need at least 2 samples, got {n}")
    sd = samples.std(axis=0, ddof=1)
    zero = np.flatnonzero(~(sd > 0))
    if zero.size:
        raise ValueError(f"zero variance in dimension {int(zero[0])}; cannot derive a bandwidth")
    return sd


def scott_bandwidth(samples) -> np.ndarray:
    s = _as_samples(samples)
    n, k = s.shape
    return _checked_std(s) * n ** (-1.0 / (k + 4))


def silverman_bandwidth(samples) -> np.ndarray:
    s = _as_samples(samples)
    n, k = s.shape
    return _checked_std(s) * (4.0 / (k + 2)) ** (1.0 / (k + 4)) * n ** (-1.0 / (k + 4))


def resolve_bandwidth(spec: BandwidthSpec, samples) -> np.ndarray:
    """Per-dimension Gaussian KDE bandwidths for ``samples`` (n x k)."""
    s = _as_samples(samples)
    k = s.shape[1]
    if spec.rule == "scott":
        return scott_bandwidth(s)
    if spec.rule == "silverman":
        return silverman_bandwidth(s)
    if spec.rule == "fixed":
        vals = np.asarray(spec.fixed_values, dtype=np.float64)
        if vals.size == 1:
            vals = np.full(k, vals[0])
        if vals.size != k:
            raise ValueError(f"{vals.size} fixed bandwidths given for {k} dimensions")
        return vals
    return cv_bandwidth(s, spec.cv_grid, min(spec.cv_folds, s.shape[0]))


def _check_bandwidths(bandwidths, k):
    h = np.asarray(bandwidths, dtype=np.float64).reshape(-1)
    if h.size != k:
        raise ValueError(f"expected {k} bandwidths, got {h.size}")
    if not np.all(h > 0) or not np.all(np.isfinite(h)):
        raise ValueError("bandwidths must be finite and strictly positive")
    return h


def kde_density_many(points, samples, bandwidths) -> np.ndarray:
    """Factorized Gaussian KDE evaluated at each row of ``points``."""
    s = _as_samples(samples)
    n, k = s.shape
    if n < 1:
        raise ValueError("need at least one sample")
    p = np.asarray(points, dtype=np.float64)
    if p.ndim == 1:
        p = p.reshape(-1, k)
    h = _check_bandwidths(bandwidths, k)
    return _accel.gauss_product_sums(p, s, h) / n


def kde_density(point, samples, bandwidths) -> float:
    """(1/n) sum_i prod_j phi((point_j - s_ij) / h_j) / h_j."""
    s = _as_samples(samples)
    point = np.asarray(point, dtype=np.float64).reshape(1, -1)
    if point.shape[1] != s.shape[1]:
        raise ValueError(f"point has dimension {point.shape[1]}, samples have {s.shape[1]}")
    return float(kde_density_many(point, s, bandwidths)[0])


def conditional_density(y, x, predictors, responses, hx, hy) -> float:
    """Kernel estimate of f(y | x) as the ratio of joint and marginal KDEs."""
    X = _as_samples(predictors)
    Y = np.asarray(responses, dtype=np.float64).reshape(-1, 1)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    hx = _check_bandwidths(hx, X.shape[1])
    hy = _check_bandwidths(hy, 1)
    marginal = kde_density(x, X, hx)
    if not marginal > 0:
        raise NumericalError(f"marginal density at x={x.tolist()} is zero; query lies outside the data support")
    joint = kde_density(np.append(x, y), np.hstack([X, Y]), np.append(hx, hy))
    return joint / marginal


def _cv_scores(s, base, grid, folds):
    n = s.shape[0]
    fold_of = np.arange(n) % folds
    scores = []
    for mult in grid:
        h = base * mult
        total = 0.0
        for f in range(folds):
            dens = kde_density_many(s[fold_of == f], s[fold_of != f], h)
            with np.errstate(divide="ignore"):
                total += np.log(dens).sum()
        scores.append(total / n)
    return np.array(scores)


def _best(scores, grid):
    # first maximum in ascending grid order, so ties go to the smaller multiplier
    if not np.isfinite(scores).any():
        raise NumericalError("every bandwidth candidate gives -inf held-out log density")
    return grid[int(np.argmax(np.where(np.isfinite(scores), scores, -np.inf)))]


def cv_bandwidth(samples, grid, folds: int) -> np.ndarray:
    """Pick the multiple of Scott's bandwidth with the best held-out log density.

    Folds are assigned round-robin by row index so the result is deterministic.
    Ties go to the smaller multiplier.
    """
    s = _as_samples(samples)
    n = s.shape[0]
    if not grid:
        raise ValueError("grid must be non-empty")
    if folds < 2 or folds > n:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    grid = sorted(float(m) for m in grid)
    base = scott_bandwidth(s)
    return base * _best(_cv_scores(s, base, grid, folds), grid)


def cv_conditional_bandwidth(predictors, responses, grid, folds: int) -> np.ndarray:
    """Bandwidths ``[h_x1, ..., h_xd, h_y]`` maximizing held-out log f(y | x).

    Predictor and response bandwidths get separate multipliers of the joint
    Scott baseline, searched over ``grid x grid``. Ties go to the smaller
    predictor multiplier, then the smaller response multiplier.
    """
    X = _as_samples(predictors)
    V = np.column_stack([X, np.asarray(responses, dtype=np.float64).reshape(-1)])
    n, k = V.shape
    if not grid:
        raise ValueError("grid must be non-empty")
    if folds < 2 or folds > n:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    grid = sorted(float(m) for m in grid)
    base = scott_bandwidth(V)
    fold_of = np.arange(n) % folds
    best_score, best_h = -np.inf, None
    for mx in grid:
        for my in grid:
            h = base * np.append(np.full(k - 1, mx), my)
            total = 0.0
            for f in range(folds):
                held, train = V[fold_of == f], V[fold_of != f]
                joint = kde_density_many(held, train, h)
                marginal = kde_density_many(held[:, :-1], train[:, :-1], h[:-1])
                with np.errstate(divide="ignore", invalid="ignore"):
                    total += np.log(joint / marginal).sum()
            if total > best_score:
                best_score, best_h = total, h
    if best_h is None:
        raise NumericalError("every bandwidth candidate gives -inf held-out conditional log density")
    return best_h
