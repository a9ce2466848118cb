"""Numerical checks of the estimator's analytic properties.

Covers the mean under the squared conditional density (the large-sample
target of the conditional-density weighting), the resulting bias, a Monte
Carlo experiment against that target, and the weight-scale invariances of
the weighted least-squares fit.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Union

import numpy as np
from scipy import integrate, stats

from rsklpr.dataset import DataSet, knn
from rsklpr.errors import NumericalError
from rsklpr.regression import EstimatorConfig, predict, wls_polyfit
from rsklpr.similarity import robust_weights

Param = Union[float, Callable[[float], float]]

FAMILIES = ("gaussian", "exponential", "lognormal", "gamma")
_REQUIRED = {
    "gaussian": ("mean", "sd"),
    "exponential": ("rate",),
    "lognormal": ("mu", "sigma"),
    "gamma": ("shape", "scale"),
}
TAIL_QUANTILE = 1e-12


@dataclass(frozen=True)
class ConditionalFamily:
    """A parametric law for Y given X; parameters are constants or functions of x."""

    family: str
    params: Dict[str, Param] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        missing = set(_REQUIRED[self.family]) - set(self.params)
        if missing:
            raise ValueError(f"{self.family} needs parameters {sorted(missing)}")

    @classmethod
    def gaussian(cls, mean: Param = 0.0, sd: Param = 1.0):
        return cls("gaussian", {"mean": mean, "sd": sd})

    @classmethod
    def exponential(cls, rate: Param = 1.0):
        return cls("exponential", {"rate": rate})

    @classmethod
    def lognormal(cls, mu: Param = 0.0, sigma: Param = 1.0):
        return cls("lognormal", {"mu": mu, "sigma": sigma})

    @classmethod
    def gamma(cls, shape: Param = 2.0, scale: Param = 1.0):
        return cls("gamma", {"shape": shape, "scale": scale})

    def _values(self, x):
        vals = {k: (v(x) if callable(v) else v) for k, v in self.params.items()}
        positive = [k for k in vals if k not in ("mean", "mu")]
        for k in positive:
            if not np.all(np.asarray(vals[k]) > 0):
                raise ValueError(f"{self.family} parameter {k} must be positive")
        return vals

    def dist(self, x):
        """Frozen scipy distribution of Y given X = x (x may be an array)."""
        p = self._values(x)
        if self.family == "gaussian":
            return stats.norm(loc=p["mean"], scale=p["sd"])
        if self.family == "exponential":
            return stats.expon(scale=1.0 / np.asarray(p["rate"], dtype=float))
        if self.family == "lognormal":
            return stats.lognorm(s=p["sigma"], scale=np.exp(p["mu"]))
        return stats.gamma(a=p["shape"], scale=p["scale"])

    def mean(self, x) -> float:
        return self.dist(x).mean()

    def sample(self, x, rng) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.dist(x).rvs(size=x.shape, random_state=rng), dtype=float)


def _quad(fn, lo, hi, breaks, epsabs=0.0):
    pts = sorted({b for b in breaks if lo < b < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(fn, lo, hi, points=pts or None, epsabs=epsabs, epsrel=1e-10, limit=500)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature did not converge: {exc}") from None
    if not math.isfinite(val):
        raise NumericalError("quadrature returned a non-finite value")
    return val


def population_mu_prime(family: ConditionalFamily, x: float = 0.0) -> float:
    """Mean of Y under the normalized squared conditional density at ``x``."""
    dist = family.dist(x)
    if family.family == "gamma" and not family._values(x)["shape"] > 0.5:
        raise NumericalError("squared gamma density is not integrable for shape <= 1/2")
    lo = float(dist.ppf(TAIL_QUANTILE))
    hi = float(dist.isf(TAIL_QUANTILE))
    breaks = [float(dist.median()), float(dist.mean())]
    mass = _quad(lambda v: dist.pdf(v) ** 2, lo, hi, breaks)
    if not mass > 0:
        raise NumericalError("squared density integrates to zero")
    # the first moment can be ~0 (centered laws), so give it an absolute floor
    floor = 1e-12 * mass * max(abs(lo), abs(hi))
    first = _quad(lambda v: v * dist.pdf(v) ** 2, lo, hi, breaks, floor)
    return first / mass


def asymptotic_bias(family: ConditionalFamily, x: float = 0.0) -> float:
    """Squared-density mean minus the true conditional mean."""
    return population_mu_prime(family, x) - float(family.mean(x))


@dataclass(frozen=True)
class TargetEstimate:
    mean: float
    stderr: float
    estimates: np.ndarray


def empirical_target_experiment(
    family: ConditionalFamily,
    T: int,
    config: EstimatorConfig,
    seed: int = 0,
    replicates: int = 1,
    queries=None,
) -> TargetEstimate:
    """Average fitted value at interior queries for data with X ~ U[0, 1], Y | X ~ family.

    Use families with constant parameters so the target does not vary in x.
    Replicate ``r`` draws from ``SeedSequence([seed, r])``.
    """
    if queries is None:
        queries = np.linspace(0.1, 0.9, 10)
    q = np.asarray(queries, dtype=float)
    estimates = []
    for r in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        X = rng.uniform(0.0, 1.0, T)
        Y = family.sample(X, rng)
        estimates.append(predict(config, DataSet(X, Y), q))
    est = np.concatenate(estimates)
    se = float(est.std(ddof=1) / np.sqrt(est.size)) if est.size > 1 else float("nan")
    return TargetEstimate(float(est.mean()), se, est)


@dataclass(frozen=True)
class InvarianceReport:
    passed: bool
    trials: int
    worst_scale_delta: float
    worst_normalize_delta: float
    scale_tol: float
    normalize_tol: float

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}: {self.trials} trials, worst scaling delta {self.worst_scale_delta:.3e} "
            f"(tol {self.scale_tol:g}), worst normalization delta {self.worst_normalize_delta:.3e} "
            f"(tol {self.normalize_tol:g})"
        )


def _rel_delta(a, b):
    denom = max(np.max(np.abs(a)), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b)) / denom)


def check_invariances(
    data: DataSet,
    config: EstimatorConfig,
    trials: int = 100,
    seed: int = 0,
    scalars=None,
    scale_tol: float = 1e-10,
    normalize_tol: float = 1e-12,
) -> InvarianceReport:
    """Refit random queries with weights ``c * w`` and ``w / sum(w)`` and compare coefficients.

    Failures are reported, never raised. ``scalars`` overrides the random
    log-uniform draw of ``c`` in [1e-3, 1e3].
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = data.predictors.min(axis=0), data.predictors.max(axis=0)
    worst_scale = worst_norm = 0.0
    for t in range(trials):
        x = rng.uniform(lo, hi)
        c = float(scalars[t % len(scalars)]) if scalars is not None else float(10 ** rng.uniform(-3, 3))
        nbr = knn(data, x, config.neighbors)
        w = robust_weights(nbr, data, config.k2, config.k1, config.bandwidth).weights
        base = wls_polyfit(x, nbr, data, w, config.degree).coefficients
        scaled = wls_polyfit(x, nbr, data, c * w, config.degree).coefficients
        normed = wls_polyfit(x, nbr, data, w / w.sum(), config.degree).coefficients
        worst_scale = max(worst_scale, _rel_delta(base, scaled))
        worst_norm = max(worst_norm, _rel_delta(base, normed))
    passed = worst_scale <= scale_tol and worst_norm <= normalize_tol
    return InvarianceReport(passed, trials, worst_scale, worst_norm, scale_tol, normalize_tol)
