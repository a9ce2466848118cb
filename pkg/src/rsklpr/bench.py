"""Synthetic benchmarks: data generation, RMSE, bootstrap intervals and suites."""

import copy
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from scipy import special

from rsklpr.dataset import DataSet, write_table
from rsklpr.errors import NumericalError
from rsklpr.kernels import BandwidthSpec
from rsklpr.regression import EstimatorConfig, predict
from rsklpr.similarity import effective_loss_curve

CURVES = ("sine_hetero", "line", "bumps", "surface2d")
NOISE_FAMILIES = ("gaussian_homo", "gaussian_hetero", "exponential", "lognormal", "gamma", "weibull")
SUITES = ("gaussian", "asymmetric", "density_sweep", "neighbor_sweep", "loss_curves")

# stable integer codes for seed derivation; never reorder
_CURVE_CODE = {c: i for i, c in enumerate(CURVES)}
_FAMILY_CODE = {f: i for i, f in enumerate(NOISE_FAMILIES)}


@lru_cache(maxsize=1)
def _defaults_text() -> str:
    return resources.files("rsklpr").joinpath("defaults.json").read_text(encoding="utf-8")


def load_defaults() -> dict:
    """The versioned default benchmark configuration shipped with the package."""
    return json.loads(_defaults_text())


def curve_dim(curve: str) -> int:
    return 2 if curve == "surface2d" else 1


def curve_values(curve: str, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    x = X[:, 0]
    if curve == "sine_hetero":
        return x * np.sin(4 * np.pi * x)
    if curve == "line":
        return 2.0 * x
    if curve == "bumps":
        centers, widths, heights = (0.2, 0.5, 0.8), (0.05, 0.08, 0.04), (1.0, -0.7, 0.8)
        return sum(h * np.exp(-(((x - c) / w) ** 2)) for c, w, h in zip(centers, widths, heights))
    if curve == "surface2d":
        return np.sin(2 * np.pi * x) * np.cos(np.pi * X[:, 1])
    raise ValueError(f"unknown curve {curve!r}; expected one of {CURVES}")


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise law. ``center`` subtracts the analytic noise mean.

    ``outlier_fraction`` of the points get an extra shift of
    ``outlier_shift`` noise standard deviations.
    """

    family: str = "gaussian_hetero"
    params: Dict[str, float] = field(default_factory=dict)
    center: bool = True
    outlier_fraction: float = 0.0
    outlier_shift: float = 5.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}")
        known = load_defaults()["noise"][self.family]
        merged = {**known, **self.params}
        unknown = set(merged) - set(known)
        if unknown:
            raise ValueError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        for k, v in merged.items():
            if k in ("mu",):
                continue
            if k == "slope":
                if v < 0:
                    raise ValueError("slope must be non-negative")
            elif not v > 0:
                raise ValueError(f"{self.family} parameter {k} must be positive")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise ValueError("outlier_fraction must be in [0, 1)")
        object.__setattr__(self, "params", merged)

    def mean(self, x) -> np.ndarray:
        p = self.params
        x = np.asarray(x, dtype=float)
        f = self.family
        if f in ("gaussian_homo", "gaussian_hetero"):
            m = 0.0
        elif f == "exponential":
            m = 1.0 / p["rate"]
        elif f == "lognormal":
            m = math.exp(p["mu"] + p["sigma"] ** 2 / 2)
        elif f == "gamma":
            m = p["shape"] * p["scale"]
        else:
            m = p["scale"] * special.gamma(1 + 1 / p["shape"])
        return np.full(x.shape, m)

    def sd(self, x) -> np.ndarray:
        p = self.params
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "gaussian_homo":
            s = p["sigma"]
        elif f == "gaussian_hetero":
            return p["base"] + p["slope"] * x
        elif f == "exponential":
            s = 1.0 / p["rate"]
        elif f == "lognormal":
            s = math.sqrt((math.exp(p["sigma"] ** 2) - 1) * math.exp(2 * p["mu"] + p["sigma"] ** 2))
        elif f == "gamma":
            s = math.sqrt(p["shape"]) * p["scale"]
        else:
            k, lam = p["shape"], p["scale"]
            s = lam * math.sqrt(special.gamma(1 + 2 / k) - special.gamma(1 + 1 / k) ** 2)
        return np.full(x.shape, s)

    def draw(self, x, rng) -> np.ndarray:
        p = self.params
        x = np.asarray(x, dtype=float)
        f = self.family
        if f == "gaussian_homo":
            e = rng.normal(0.0, p["sigma"], x.shape)
        elif f == "gaussian_hetero":
            e = rng.normal(0.0, 1.0, x.shape) * (p["base"] + p["slope"] * x)
        elif f == "exponential":
            e = rng.exponential(1.0 / p["rate"], x.shape)
        elif f == "lognormal":
            e = rng.lognormal(p["mu"], p["sigma"], x.shape)
        elif f == "gamma":
            e = rng.gamma(p["shape"], p["scale"], x.shape)
        else:
            e = p["scale"] * rng.weibull(p["shape"], x.shape)
        return e - self.mean(x) if self.center else e


def generate_synthetic(curve: str, n: int, noise: NoiseSpec, seed=0):
    """Draw ``n`` points with X ~ U[0, 1]^d and Y = m(X) + noise.

    Returns ``(data, truth)`` where ``truth`` is the target at the training
    points: m(X), plus the noise mean when the noise is not centered.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if curve not in CURVES:
        raise ValueError(f"unknown curve {curve!r}; expected one of {CURVES}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, (n, curve_dim(curve)))
    m = curve_values(curve, X)
    eps = noise.draw(X[:, 0], rng)
    if noise.outlier_fraction > 0:
        k = int(round(noise.outlier_fraction * n))
        idx = rng.choice(n, size=k, replace=False)
        eps[idx] += noise.outlier_shift * noise.sd(X[idx, 0])
    return DataSet(X, m + eps), ground_truth(curve, noise, X)


def ground_truth(curve: str, noise: NoiseSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    m = curve_values(curve, X)
    return m if noise.center else m + noise.mean(X[:, 0])


def query_grid(curve: str, points: int) -> np.ndarray:
    g = np.linspace(0.0, 1.0, points)
    if curve_dim(curve) == 1:
        return g[:, None]
    side = max(2, int(round(math.sqrt(points))))
    g = np.linspace(0.0, 1.0, side)
    a, b = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def rmse(predictions, truth) -> float:
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(truth, dtype=float).reshape(-1)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} truth values")
    if p.size < 1:
        raise ValueError("need at least one value")
    return float(np.sqrt(np.mean((p - t) ** 2)))


@dataclass(frozen=True)
class CIResult:
    lower: np.ndarray
    upper: np.ndarray
    replicates: int
    skipped: int


def bootstrap_ci(data: DataSet, config: EstimatorConfig, queries, replicates: int = 500, level: float = 0.95, seed=0) -> CIResult:
    """Percentile bootstrap intervals for the fit at each query.

    Replicates whose fit fails numerically are skipped and counted.
    """
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    rng = np.random.default_rng(seed)
    fits, skipped = [], 0
    for _ in range(replicates):
        idx = rng.integers(0, data.T, data.T)
        try:
            fits.append(predict(config, data.subset(idx), queries))
        except (NumericalError, np.linalg.LinAlgError):
            skipped += 1
    if len(fits) < 2:
        raise NumericalError(f"only {len(fits)} of {replicates} bootstrap replicates could be fitted")
    fits = np.array(fits)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(fits, [alpha, 1.0 - alpha], axis=0)
    return CIResult(lo, hi, replicates, skipped)


def method_config(spec: dict, neighbors: int) -> EstimatorConfig:
    spec = dict(spec)
    bw = spec.pop("bandwidth", "scott")
    if isinstance(bw, dict):
        bandwidth = BandwidthSpec(**bw)
    else:
        bandwidth = BandwidthSpec(rule=bw)
    return EstimatorConfig(neighbors=neighbors, bandwidth=bandwidth, **spec)


def resolve_neighbors(fraction: float, n: int) -> int:
    return int(min(n, max(3, round(fraction * n))))


def _deep_update(base, overrides):
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v
    return base


def suite_config(suite: str, overrides: Optional[dict] = None) -> dict:
    """Resolved configuration for ``suite``: defaults merged with ``overrides``."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; valid suites: {', '.join(SUITES)}")
    d = load_defaults()
    cfg = {
        "version": d["version"],
        "queries": d["queries"],
        "method_specs": d["methods"],
        "noise": d["noise"],
        **copy.deepcopy(d["suites"][suite]),
    }
    return _deep_update(cfg, overrides or {})


def _cell_seed(seed, curve, family, n):
    return np.random.SeedSequence([int(seed), _CURVE_CODE[curve], _FAMILY_CODE[family], int(n)])


def run_cell(cell: dict, cfg: dict) -> dict:
    """Fit one (method, family, n, N, seed) cell and score it on the query grid."""
    curve = cfg["curve"]
    noise = NoiseSpec(cell["family"], cfg["noise"][cell["family"]], center=cfg["center"])
    data, _ = generate_synthetic(curve, cell["n"], noise, _cell_seed(cell["seed"], curve, cell["family"], cell["n"]))
    q = query_grid(curve, cfg["queries"])
    est = method_config(cfg["method_specs"][cell["method"]], cell["N"])
    start = time.perf_counter()
    pred = predict(est, data, q)
    wall = time.perf_counter() - start
    return {**cell, "rmse": rmse(pred, ground_truth(curve, noise, q)), "wall_time": wall}


def _run_cell_args(args):
    return run_cell(*args)


def suite_cells(cfg: dict, seeds) -> List[dict]:
    cells = []
    for family in cfg["families"]:
        for n in cfg["sizes"]:
            for frac in cfg["neighbor_fractions"]:
                N = resolve_neighbors(frac, n)
                for seed in seeds:
                    for method in cfg["methods"]:
                        cells.append({"method": method, "family": family, "n": n, "N": N, "seed": int(seed)})
    return cells


def loss_curve_table(sigmas, residual_max=10.0, points=201) -> np.ndarray:
    r = np.linspace(-residual_max, residual_max, points)
    rows = [np.column_stack([r, np.full(r.shape, s), effective_loss_curve(r, s)]) for s in sigmas]
    return np.vstack(rows)


def summarize(cells: List[dict]) -> List[dict]:
    groups: Dict[tuple, List[float]] = {}
    for c in cells:
        groups.setdefault((c["family"], c["method"], c["n"], c["N"]), []).append(c["rmse"])
    out = []
    for (family, method, n, N), vals in groups.items():
        v = np.array(vals)
        out.append(
            {
                "family": family,
                "method": method,
                "n": n,
                "N": N,
                "mean_rmse": float(v.mean()),
                "std_rmse": float(v.std(ddof=1)) if v.size > 1 else 0.0,
                "seeds": int(v.size),
            }
        )
    return out


def run_suite(suite: str, overrides: Optional[dict] = None, seeds=10, out=None, workers: int = 1) -> dict:
    """Run a benchmark suite and optionally write ``out`` (JSON) plus a companion CSV.

    ``seeds`` is a count (seeds 0..k-1) or an explicit sequence. Results do not
    depend on ``workers``: every cell derives its randomness from its own key.
    """
    cfg = suite_config(suite, overrides)
    seed_list = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    if out is not None:
        out = Path(out)
        if not out.parent.is_dir():
            raise OSError(f"output directory does not exist: {out.parent}")
    if suite == "loss_curves":
        table = loss_curve_table(cfg["sigmas"], cfg["residual_max"], cfg["points"])
        report = {"suite": suite, "config": cfg, "cells": []}
        if out is not None:
            write_table(out.with_suffix(".csv"), ["residual", "sigma", "value"], table)
    else:
        cells = suite_cells(cfg, seed_list)
        jobs = [(c, cfg) for c in cells]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_cell_args, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
        else:
            results = [run_cell(c, cfg) for c in cells]
        report = {"suite": suite, "config": cfg, "cells": results}
        if out is not None:
            summary = summarize(results)
            cols = ["family", "method", "n", "N", "mean_rmse", "std_rmse", "seeds"]
            _write_records(out.with_suffix(".csv"), cols, summary)
    if out is not None:
        out.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return report


def _write_records(path, cols, records):
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for r in records:
            fh.write(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols) + "\n")


def strip_wall_time(report: dict) -> dict:
    r = copy.deepcopy(report)
    for c in r.get("cells", []):
        c.pop("wall_time", None)
    return r
