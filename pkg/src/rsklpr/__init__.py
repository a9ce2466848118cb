"""Robust local polynomial regression with similarity-kernel weights."""

from rsklpr._accel import USE_NUMBA
from rsklpr.dataset import DataSet, Neighborhood, knn, load_csv, normalize_distances
from rsklpr.errors import DataError, NumericalError
from rsklpr.kernels import (
    BandwidthSpec,
    conditional_density,
    cv_bandwidth,
    cv_conditional_bandwidth,
    k1_eval,
    kde_density,
    resolve_bandwidth,
)
from rsklpr.regression import EstimatorConfig, PolyFit, estimate, predict, robust_lowess, wls_polyfit
from rsklpr.similarity import WeightVector, effective_loss_curve, robust_weights

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "BandwidthSpec",
    "DataError",
    "DataSet",
    "EstimatorConfig",
    "Neighborhood",
    "NumericalError",
    "PolyFit",
    "WeightVector",
    "conditional_density",
    "cv_bandwidth",
    "cv_conditional_bandwidth",
    "effective_loss_curve",
    "estimate",
    "k1_eval",
    "kde_density",
    "knn",
    "load_csv",
    "normalize_distances",
    "predict",
    "resolve_bandwidth",
    "robust_lowess",
    "robust_weights",
    "wls_polyfit",
]
