import math

import numpy as np
from scipy.integrate import trapezoid
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsklpr.errors import NumericalError
from rsklpr.kernels import (
    DISTANCE_KERNELS,
    BandwidthSpec,
    conditional_density,
    cv_bandwidth,
    cv_conditional_bandwidth,
    k1_eval,
    kde_density,
    kde_density_many,
    resolve_bandwidth,
    scott_bandwidth,
    silverman_bandwidth,
)

INV_SQRT_2PI = 1 / math.sqrt(2 * math.pi)


@pytest.mark.parametrize(
    "kernel, u, expected",
    [
        ("laplacian", 0.0, 1.0),
        ("tricube", 1.0, 0.0),
        ("laplacian", 1.0, math.exp(-1)),
        ("gaussian", 1.0, math.exp(-0.5)),
        ("epanechnikov", 0.5, 0.75),
        ("uniform", 0.7, 1.0),
    ],
)
def test_k1_values(kernel, u, expected):
    assert k1_eval(kernel, u) == pytest.approx(expected, abs=1e-15)


def test_k1_laplacian_at_one():
    assert k1_eval("laplacian", 1.0) == pytest.approx(0.367879, abs=1e-6)


@pytest.mark.parametrize("u", [-0.1, 1.1, float("nan")])
def test_k1_rejects_out_of_range(u):
    with pytest.raises(ValueError):
        k1_eval("laplacian", u)


@pytest.mark.parametrize("kernel", DISTANCE_KERNELS)
def test_k1_non_increasing_and_non_negative(kernel):
    u = np.linspace(0, 1, 1001)
    v = k1_eval(kernel, u)
    assert np.all(v >= 0)
    assert np.all(np.diff(v) <= 0)


def _unit_sd_sample(n, rng):
    z = rng.normal(size=n)
    z = (z - z.mean()) / z.std(ddof=1)
    return z


def test_scott_rule_hand_value(rng):
    z = _unit_sd_sample(100, rng)
    # hand computation: 1 * 100 ** (-1/5)
    assert scott_bandwidth(z)[0] == pytest.approx(0.398107, abs=1e-6)


def test_silverman_rule_formula(rng):
    z = np.column_stack([_unit_sd_sample(64, rng), 2 * _unit_sd_sample(64, rng)])
    factor = (4 / 4) ** (1 / 6) * 64 ** (-1 / 6)
    np.testing.assert_allclose(silverman_bandwidth(z), [factor, 2 * factor], rtol=1e-12)


def test_resolve_fixed_passthrough():
    np.testing.assert_array_equal(resolve_bandwidth(BandwidthSpec("fixed", fixed_values=[0.5]), np.zeros((3, 1))), [0.5])


def test_resolve_zero_variance_names_dimension():
    with pytest.raises(ValueError, match="dimension 1"):
        resolve_bandwidth(BandwidthSpec(), np.column_stack([np.arange(5.0), np.ones(5)]))


def test_resolve_needs_two_samples():
    with pytest.raises(ValueError):
        resolve_bandwidth(BandwidthSpec(), np.ones((1, 1)))


@pytest.mark.parametrize(
    "kwargs", [dict(rule="fixed"), dict(rule="cv_grid"), dict(rule="cv_grid", cv_grid=[]), dict(rule="nope"), dict(rule="fixed", fixed_values=[0.0])]
)
def test_bandwidth_spec_validation(kwargs):
    with pytest.raises(ValueError):
        BandwidthSpec(**kwargs)


def test_kde_single_sample_standard_normal_peak():
    assert kde_density([0.0], [[0.0]], [1.0]) == pytest.approx(INV_SQRT_2PI, abs=1e-15)


def test_kde_symmetric_pair():
    a = 0.7
    v = kde_density([0.0], [[-a], [a]], [1.0])
    single = math.exp(-a * a / 2) * INV_SQRT_2PI
    assert v == pytest.approx(single, rel=1e-14)


def test_kde_rejects_bad_bandwidth():
    with pytest.raises(ValueError):
        kde_density([0.0], [[0.0]], [0.0])


def test_kde_integrates_to_one_1d(rng):
    s = rng.normal(size=(40, 1))
    grid = np.linspace(-8, 8, 4001)
    dens = kde_density_many(grid[:, None], s, [0.4])
    assert trapezoid(dens, grid) == pytest.approx(1.0, abs=0.01)


def test_kde_integrates_to_one_2d(rng):
    s = rng.normal(size=(30, 2)) * [1.0, 0.5]
    g1 = np.linspace(-6, 6, 241)
    g2 = np.linspace(-4, 4, 161)
    a, b = np.meshgrid(g1, g2, indexing="ij")
    dens = kde_density_many(np.column_stack([a.ravel(), b.ravel()]), s, [0.5, 0.3]).reshape(a.shape)
    assert trapezoid(trapezoid(dens, g2, axis=1), g1) == pytest.approx(1.0, abs=0.01)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20), st.floats(-10, 10), st.floats(0.05, 5))
def test_kde_is_mean_of_single_sample_densities(samples, point, h):
    s = np.array(samples)[:, None]
    whole = kde_density([point], s, [h])
    parts = [kde_density([point], s[i : i + 1], [h]) for i in range(len(samples))]
    assert whole >= 0
    assert whole == pytest.approx(np.mean(parts), rel=1e-12, abs=1e-300)


def test_conditional_single_sample_ratio():
    # joint 1/(2 pi) over marginal 1/sqrt(2 pi)
    v = conditional_density(2.0, [1.0], [[1.0]], [2.0], [1.0], [1.0])
    assert v == pytest.approx(INV_SQRT_2PI, rel=1e-14)


def test_conditional_tail_vanishes(rng):
    X = rng.uniform(size=(20, 1))
    Y = rng.normal(size=20)
    far = conditional_density(60.0, [0.5], X, Y, [0.2], [0.5])
    assert far < 1e-300


def test_conditional_integrates_over_y(rng):
    X = rng.uniform(size=(50, 2))
    Y = rng.gamma(2.0, size=50)
    ys = np.linspace(-6, 16, 3001)
    vals = [conditional_density(y, [0.3, 0.6], X, Y, [0.2, 0.25], [0.4]) for y in ys]
    assert trapezoid(vals, ys) == pytest.approx(1.0, abs=0.01)


def test_conditional_zero_marginal_raises():
    with pytest.raises(NumericalError):
        conditional_density(0.0, [1e6], [[0.0]], [0.0], [1e-3], [1.0])


def test_conditional_invariant_to_duplicated_sample(rng):
    X = rng.uniform(size=(15, 1))
    Y = rng.normal(size=15)
    a = conditional_density(0.3, [0.5], X, Y, [0.2], [0.4])
    b = conditional_density(0.3, [0.5], np.vstack([X, X, X]), np.concatenate([Y, Y, Y]), [0.2], [0.4])
    assert a == pytest.approx(b, rel=1e-12)


def test_cv_single_candidate_is_scott(rng):
    s = rng.normal(size=(80, 2))
    np.testing.assert_array_equal(cv_bandwidth(s, [1.0], 5), scott_bandwidth(s))


def test_cv_folds_exceed_n():
    with pytest.raises(ValueError):
        cv_bandwidth(np.arange(4.0), [1.0], 5)


def _oracle_cv_scores(x, base, grid, folds):
    # independent held-out log density with scipy-free explicit Gaussian sums
    scores = []
    for m in grid:
        h = base * m
        total = 0.0
        for i in range(x.size):
            train = x[np.arange(x.size) % folds != i % folds]
            total += math.log(np.mean(np.exp(-0.5 * ((x[i] - train) / h) ** 2)) / (h * math.sqrt(2 * math.pi)))
        scores.append(total / x.size)
    return scores


def test_cv_standard_normal_prefers_middle():
    x = np.random.default_rng(2024).normal(size=500)
    grid = [0.25, 1.0, 4.0]
    base = scott_bandwidth(x)[0]
    oracle = _oracle_cv_scores(x, base, grid, 5)
    assert int(np.argmax(oracle)) == 1
    assert cv_bandwidth(x, grid, 5)[0] == pytest.approx(base * grid[int(np.argmax(oracle))])


def test_cv_conditional_single_candidate_is_scott(rng):
    X = rng.uniform(size=(60, 1))
    Y = rng.normal(size=60)
    h = cv_conditional_bandwidth(X, Y, [1.0], 5)
    np.testing.assert_allclose(h, scott_bandwidth(np.column_stack([X, Y])))


def test_cv_conditional_ignores_flat_predictor_and_shrinks_skewed_response():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 0.02, (500, 1))
    Y = rng.exponential(size=500)
    grid = [0.25, 0.5, 1.0, 2.0, 4.0]
    h = cv_conditional_bandwidth(X, Y, grid, 5)
    base = scott_bandwidth(np.column_stack([X, Y]))
    ratio = h / base
    # a flat predictor carries no information about y: the widest candidate wins
    assert ratio[0] == 4.0
    assert ratio[1] <= 1.0
