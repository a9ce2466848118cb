"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``RSKLPR_DISABLE_NUMBA=1`` before import to force the numpy path. Both
implementations are always importable under explicit names so they can be
compared against each other.
"""

import math
import os

import numpy as np

_DISABLED = os.environ.get("RSKLPR_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(fn):
            return fn

        return deco


USE_NUMBA = HAVE_NUMBA and not _DISABLED

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# numpy path evaluates at most this many (point, sample) pairs per block
_BLOCK_PAIRS = 1 << 20


def gauss_product_sums_numpy(points, samples, bandwidths):
    """Sum over samples of the product Gaussian kernel, for every point.

    Returns ``out[i] = sum_j prod_l phi((points[i,l] - samples[j,l]) / h_l) / h_l``.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    h = np.asarray(bandwidths, dtype=np.float64)
    m, k = points.shape
    n = samples.shape[0]
    # tiny bandwidths overflow to inf here; callers check finiteness
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.empty(m)
        norm = _INV_SQRT_2PI**k / np.prod(h)
        ps = points / h
        ss = samples / h
        step = max(1, _BLOCK_PAIRS // max(n, 1))
        for start in range(0, m, step):
            block = ps[start : start + step]
            sq = np.zeros((block.shape[0], n))
            for col in range(k):
                diff = block[:, col, None] - ss[None, :, col]
                sq += diff * diff
            out[start : start + step] = np.exp(-0.5 * sq).sum(axis=1)
        return out * norm


@njit(cache=True, fastmath=False)
def _gauss_product_sums_jit(points, samples, h):
    m, k = points.shape
    n = samples.shape[0]
    norm = 1.0
    for col in range(k):
        norm *= _INV_SQRT_2PI / h[col]
    out = np.empty(m)
    for i in range(m):
        acc = 0.0
        for j in range(n):
            sq = 0.0
            for col in range(k):
                z = (points[i, col] - samples[j, col]) / h[col]
                sq += z * z
            acc += math.exp(-0.5 * sq)
        out[i] = acc * norm
    return out


def gauss_product_sums_numba(points, samples, bandwidths):
    points = np.ascontiguousarray(points, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    h = np.ascontiguousarray(bandwidths, dtype=np.float64)
    return _gauss_product_sums_jit(points, samples, h)


def sq_distances_numpy(predictors, x):
    diff = predictors - x
    return np.einsum("ij,ij->i", diff, diff)


@njit(cache=True)
def _sq_distances_jit(predictors, x):
    t, d = predictors.shape
    out = np.empty(t)
    for i in range(t):
        acc = 0.0
        for col in range(d):
            z = predictors[i, col] - x[col]
            acc += z * z
        out[i] = acc
    return out


def sq_distances_numba(predictors, x):
    return _sq_distances_jit(
        np.ascontiguousarray(predictors, dtype=np.float64), np.ascontiguousarray(x, dtype=np.float64)
    )


if USE_NUMBA:
    gauss_product_sums = gauss_product_sums_numba
    sq_distances = sq_distances_numba
else:
    gauss_product_sums = gauss_product_sums_numpy
    sq_distances = sq_distances_numpy
