import json

import numpy as np
import pytest

from rsklpr.bench import (
    NoiseSpec,
    bootstrap_ci,
    generate_synthetic,
    ground_truth,
    query_grid,
    resolve_neighbors,
    rmse,
    run_suite,
    strip_wall_time,
    suite_config,
)
from rsklpr.regression import EstimatorConfig


def test_rmse_hand_values():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rmse([], [])


def test_generator_deterministic_and_shaped():
    noise = NoiseSpec("exponential", center=False)
    a, ta = generate_synthetic("sine_hetero", 100, noise, 7)
    b, tb = generate_synthetic("sine_hetero", 100, noise, 7)
    np.testing.assert_array_equal(a.responses, b.responses)
    np.testing.assert_array_equal(ta, tb)
    assert a.T == 100 and a.d == 1
    c, _ = generate_synthetic("surface2d", 50, NoiseSpec("gaussian_homo"), 1)
    assert c.d == 2


def test_noise_moments_match_analytic():
    x = np.full(200_000, 0.5)
    rng = np.random.default_rng(0)
    for fam in ("gaussian_hetero", "exponential", "lognormal", "gamma", "weibull"):
        ns = NoiseSpec(fam, center=False)
        e = ns.draw(x, rng)
        assert e.mean() == pytest.approx(ns.mean(x)[0], rel=0.02, abs=0.002), fam
        assert e.std() == pytest.approx(ns.sd(x)[0], rel=0.02), fam
        assert NoiseSpec(fam).draw(x, rng).mean() == pytest.approx(0.0, abs=0.01), fam


def test_outlier_count_and_shift():
    clean, _ = generate_synthetic("line", 200, NoiseSpec("gaussian_homo"), 5)
    dirty, _ = generate_synthetic("line", 200, NoiseSpec("gaussian_homo", outlier_fraction=0.1), 5)
    diff = dirty.responses - clean.responses
    moved = np.flatnonzero(np.abs(diff) > 1e-12)
    assert moved.size == 20
    np.testing.assert_allclose(diff[moved], 5 * 0.3)


def test_uncentered_truth_includes_noise_mean():
    X = np.array([[0.25]])
    assert ground_truth("line", NoiseSpec("exponential", center=False), X)[0] == pytest.approx(0.5 + 0.5)
    assert ground_truth("line", NoiseSpec("exponential"), X)[0] == pytest.approx(0.5)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("cauchy")
    with pytest.raises(ValueError):
        NoiseSpec("exponential", {"sigma": 1.0})
    with pytest.raises(ValueError):
        NoiseSpec("gamma", {"shape": -1.0})
    with pytest.raises(ValueError):
        NoiseSpec(outlier_fraction=1.0)


def test_query_grid_and_neighbors():
    assert query_grid("line", 100).shape == (100, 1)
    assert query_grid("surface2d", 100).shape == (100, 2)
    assert resolve_neighbors(0.15, 200) == 30
    assert resolve_neighbors(0.01, 50) == 3
    assert resolve_neighbors(2.0, 50) == 50


def test_suite_config_overrides_and_unknown():
    cfg = suite_config("gaussian", {"sizes": [60], "noise": {"gaussian_homo": {"sigma": 0.1}}})
    assert cfg["sizes"] == [60]
    assert cfg["noise"]["gaussian_homo"]["sigma"] == 0.1
    assert cfg["noise"]["exponential"]["rate"] == 2.0
    with pytest.raises(ValueError, match="valid suites"):
        suite_config("nope")


def test_bootstrap_coverage_on_linear_data():
    # line + homoscedastic Gaussian noise, global fit: intervals should cover the truth
    q = np.array([[0.3], [0.5], [0.7]])
    cfg = EstimatorConfig("lpr", 60, k1="uniform")
    hits = total = 0
    for seed in range(20):
        data, _ = generate_synthetic("line", 60, NoiseSpec("gaussian_homo"), seed)
        ci = bootstrap_ci(data, cfg, q, replicates=200, level=0.9, seed=seed)
        truth = 2 * q[:, 0]
        hits += int(np.sum((ci.lower <= truth) & (truth <= ci.upper)))
        total += truth.size
        assert ci.skipped == 0
    assert 0.78 <= hits / total <= 0.98


def test_bootstrap_validation():
    data, _ = generate_synthetic("line", 20, NoiseSpec("gaussian_homo"), 0)
    with pytest.raises(ValueError):
        bootstrap_ci(data, EstimatorConfig("lpr", 10), [0.5], replicates=1)
    with pytest.raises(ValueError):
        bootstrap_ci(data, EstimatorConfig("lpr", 10), [0.5], level=1.0)


SMALL = {"sizes": [40], "queries": 20}


def test_run_suite_outputs(tmp_path):
    out = tmp_path / "report.json"
    rep = run_suite("gaussian", SMALL, seeds=2, out=out)
    assert len(rep["cells"]) == 2 * 2 * 3
    on_disk = json.loads(out.read_text())
    assert on_disk["suite"] == "gaussian"
    header = (tmp_path / "report.csv").read_text().splitlines()[0]
    assert header == "family,method,n,N,mean_rmse,std_rmse,seeds"


def test_loss_curve_suite_csv(tmp_path):
    run_suite("loss_curves", {"points": 11}, out=tmp_path / "lc.json")
    lines = (tmp_path / "lc.csv").read_text().splitlines()
    assert lines[0] == "residual,sigma,value" and len(lines) == 1 + 3 * 11


def test_run_suite_missing_directory(tmp_path):
    with pytest.raises(OSError):
        run_suite("gaussian", SMALL, seeds=1, out=tmp_path / "no" / "r.json")


def test_seed_changes_results():
    a = run_suite("gaussian", SMALL, seeds=[0])
    b = run_suite("gaussian", SMALL, seeds=[1])
    assert [c["rmse"] for c in a["cells"]] != [c["rmse"] for c in b["cells"]]
    assert strip_wall_time(a)["cells"][0].keys() == {"method", "family", "n", "N", "seed", "rmse"}
