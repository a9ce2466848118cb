"""Compound similarity-kernel weights: distance kernel times density kernel."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from rsklpr.dataset import DataSet, Neighborhood
from rsklpr.errors import NumericalError
from rsklpr.kernels import (
    BandwidthSpec,
    _check_bandwidths,
    cv_conditional_bandwidth,
    k1_eval,
    kde_density_many,
    resolve_bandwidth,
)

K2_VARIANTS = ("conditional", "joint", "none")


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: np.ndarray
    k1_part: np.ndarray
    k2_part: np.ndarray


def _density_part(Xn, Yn, variant, bandwidth):
    """Per-point conditional or joint density over the neighborhood sample."""
    n = Yn.shape[0]
    if n < 2 or not Yn.std() > 0:
        # no spread in the response: nothing to down-weight
        return np.ones(n)
    # constant predictor columns only add a common factor to every point
    keep = Xn.std(axis=0) > 0
    V = np.column_stack([Xn[:, keep], Yn])
    if isinstance(bandwidth, BandwidthSpec):
        if bandwidth.rule == "cv_grid" and variant == "conditional" and V.shape[1] > 1:
            # score candidates on the quantity actually used as the weight
            folds = min(bandwidth.cv_folds, n)
            h = cv_conditional_bandwidth(V[:, :-1], V[:, -1], bandwidth.cv_grid, folds)
        else:
            h = resolve_bandwidth(bandwidth, V)
    else:
        h = np.asarray(bandwidth, dtype=np.float64).reshape(-1)
        if h.size == Xn.shape[1] + 1:
            h = np.append(h[:-1][keep], h[-1])
        h = _check_bandwidths(h, V.shape[1])
    joint = kde_density_many(V, V, h)
    # with every predictor constant, f(y|x) reduces to the response marginal
    if variant == "joint" or V.shape[1] == 1:
        return joint
    marginal = kde_density_many(V[:, :-1], V[:, :-1], h[:-1])
    return joint / marginal


def robust_weights(
    nbr: Neighborhood,
    data: DataSet,
    variant: str = "conditional",
    k1: str = "laplacian",
    bandwidth: Union[BandwidthSpec, np.ndarray, None] = None,
) -> WeightVector:
    """Regression weights K1(distance) * K2(density) for each neighbor.

    ``bandwidth`` is either a :class:`BandwidthSpec`, resolved against the
    neighborhood's (predictor, response) sample, or explicit per-dimension
    values ``[h_x1, ..., h_xd, h_y]``. Density estimates use the neighborhood
    points only; factors shared by every neighbor are dropped.
    """
    if variant not in K2_VARIANTS:
        raise ValueError(f"unknown K2 variant {variant!r}; expected one of {K2_VARIANTS}")
    if bandwidth is None:
        bandwidth = BandwidthSpec()
    if nbr.degenerate:
        k1_part = np.ones(nbr.N)
    else:
        k1_part = np.asarray(k1_eval(k1, nbr.normalized_distances), dtype=np.float64).reshape(-1)
        if not k1_part.any():
            # bounded kernel with every neighbor on the support edge
            k1_part = np.ones(nbr.N)
    if variant == "none":
        k2_part = np.ones(nbr.N)
    else:
        Xn = data.predictors[nbr.indices]
        Yn = data.responses[nbr.indices]
        k2_part = _density_part(Xn, Yn, variant, bandwidth)
        if not np.all(np.isfinite(k2_part)):
            raise NumericalError("density weights overflowed; bandwidth too small for the data scale")
        if not np.any(k1_part * k2_part > 0):
            k2_part = np.ones(nbr.N)
    return WeightVector(k1_part * k2_part, k1_part, k2_part)


def effective_loss_curve(residuals, sigma: float) -> np.ndarray:
    """Squared residual times a Gaussian density of scale ``sigma``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.asarray(residuals, dtype=np.float64)
    z = r / sigma
    return r * r * np.exp(-0.5 * z * z) / (sigma * np.sqrt(2.0 * np.pi))
