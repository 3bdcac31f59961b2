import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import special, stats

from tailmix.diagnostics import (DEFAULT_PROBS, binned_probabilities, empirical_step_cdf, l1_bin_edges,
                                 l1_distance, plotting_positions, qq_normal_data, quantile_table,
                                 tail_plot_series)
from tailmix.errors import DataError, TailmixError
from tailmix.estimation import ModelKind, build_model
from tailmix.io import ModelFile

GPD_TRUE = (0.3, 0.4, 1.0, 0.2, 0.4)


@pytest.fixture(scope="module")
def gpd_model():
    return build_model(ModelKind.GPD_N_GPD, GPD_TRUE)


def test_bin_layout():
    edges = l1_bin_edges(stats.norm())
    assert edges.size == 99
    assert edges[0] == pytest.approx(stats.norm.ppf(0.001), rel=1e-14)
    assert edges[-1] == pytest.approx(stats.norm.ppf(0.999), rel=1e-14)
    p = binned_probabilities(stats.norm(), edges)
    assert p.size == 100
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    assert p[0] == pytest.approx(0.001, rel=1e-12) and p[-1] == pytest.approx(0.001, rel=1e-12)


def test_l1_identical_is_zero(gpd_model):
    assert l1_distance(gpd_model, gpd_model) == 0.0


def test_l1_disjoint_is_one():
    a, b = stats.uniform(0, 1), stats.uniform(5, 1)
    assert l1_distance(a, b, reference=stats.uniform(0, 6)) == pytest.approx(1.0, abs=1e-12)


def _l1_oracle(a, b, reference, n_points):
    # dense trapezoid integration of the densities, re-binned into the same 100 bins
    edges = l1_bin_edges(reference)
    grid = np.linspace(edges[0], edges[-1], n_points)

    def binned(m):
        f = m.pdf(grid)
        run = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(grid))])
        inner = np.diff(np.interp(edges, grid, run))
        return np.concatenate([[m.cdf(edges[0])], inner, [m.sf(edges[-1])]])

    return 0.5 * np.abs(binned(a) - binned(b)).sum()


def test_l1_normal_scale_oracle():
    a, b = stats.norm(0, 1), stats.norm(0, 1.1)
    frozen_oracle = 0.04607
    assert _l1_oracle(a, b, a, n_points=2 * 10**6) == pytest.approx(frozen_oracle, abs=2e-5)
    assert l1_distance(a, b, reference=a) == pytest.approx(frozen_oracle, abs=2e-5)


gpd_params = st.tuples(st.floats(0.1, 0.5), st.floats(0.2, 0.6), st.floats(0.8, 1.2),
                       st.floats(0.1, 0.5), st.floats(0.2, 0.6))


def _gpd_or_reject(params):
    try:
        return build_model(ModelKind.GPD_N_GPD, params)
    except TailmixError:
        assume(False)


@settings(max_examples=15, deadline=None)
@given(gpd_params, gpd_params, gpd_params)
def test_l1_symmetric_and_triangle(pa, pb, pc):
    a, b, c = (_gpd_or_reject(p) for p in (pa, pb, pc))
    ref = a
    ab, ba = l1_distance(a, b, ref), l1_distance(b, a, ref)
    assert ab == pytest.approx(ba, abs=1e-15)
    assert 0.0 <= ab <= 1.0
    assert l1_distance(a, c, ref) <= ab + l1_distance(b, c, ref) + 1e-14


@pytest.mark.parametrize("kind,params", [
    (ModelKind.GPD_N_GPD, GPD_TRUE),
    (ModelKind.WEIBULL_N_WEIBULL, (0.5, 0.2, 1.0, 0.6, 0.25)),
    (ModelKind.TRANSFORM_NORMAL, (-1.5, 1.5, 0.45, 1.0, 0.6)),
])
def test_l1_zero_after_serialization(kind, params):
    mf = ModelFile.from_params(kind, params)
    again = ModelFile.from_dict(json.loads(json.dumps(mf.to_dict())))
    assert l1_distance(mf.model(), again.model()) == 0.0


def test_quantile_table_examples(gpd_model):
    table = quantile_table(gpd_model)
    assert [p for p, _ in table] == list(DEFAULT_PROBS)
    for (_, x), ref in zip(table, (-9.15, -3.92, 3.00, 5.91)):
        assert x == pytest.approx(ref, abs=0.02)
    wei = build_model(ModelKind.WEIBULL_N_WEIBULL, (0.5, 0.2, 1.0, 0.6, 0.25))
    assert quantile_table(wei, [0.999])[0][1] == pytest.approx(6.21, abs=0.02)


def test_quantile_table_symmetric_model():
    m = build_model(ModelKind.GPD_N_GPD, (0.25, 0.5, 1.0, 0.25, 0.5))
    probs = [0.001, 0.01, 0.2, 0.8, 0.99, 0.999]
    xs = [x for _, x in quantile_table(m, probs)]
    for lo, hi in zip(xs, xs[::-1]):
        assert lo == pytest.approx(-hi, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(gpd_params, st.lists(st.floats(1e-4, 1 - 1e-4), min_size=2, max_size=8, unique=True))
def test_quantile_table_increasing(params, probs):
    probs = sorted(probs)
    xs = [x for _, x in quantile_table(_gpd_or_reject(params), probs)]
    gaps = np.diff(probs)
    for dx, dp in zip(np.diff(xs), gaps):
        if dp > 1e-9:
            assert dx > 0


def test_qq_of_exact_quantiles_is_a_line():
    n = 200
    data = special.ndtri(plotting_positions(n))
    theoretical, empirical = qq_normal_data(data)
    np.testing.assert_allclose(theoretical, data, rtol=0, atol=1e-15)
    # standardizing by the sample deviation rescales, so the points lie on a line through 0
    slope = 1.0 / np.std(data, ddof=1)
    np.testing.assert_allclose(empirical, slope * theoretical, atol=1e-9)
    # standardizing the data first makes the identity exact
    t2, e2 = qq_normal_data(data * slope)
    np.testing.assert_allclose(e2, slope * t2, atol=1e-9)


def test_qq_guards():
    with pytest.raises(DataError):
        qq_normal_data([1.0])
    with pytest.raises(DataError):
        qq_normal_data([2.0, 2.0, 2.0])
    with pytest.raises(DataError):
        qq_normal_data([0.0, np.inf])


def test_qq_heavy_tails(gpd_model):
    x = gpd_model.sample(np.random.default_rng(4065), 4065)
    theoretical, empirical = qq_normal_data(x)
    assert empirical[-1] > theoretical[-1]
    assert empirical[0] < theoretical[0]
    assert np.all(np.diff(empirical) >= 0)


@pytest.mark.parametrize("side", ["left", "right"])
def test_tailplot_with_empirical_matching_model(side):
    x = np.random.default_rng(1).standard_normal(500)
    series = tail_plot_series(x, empirical_step_cdf(x), side)
    assert np.all(np.diff(series.x) > 0)
    np.testing.assert_allclose(series.log_model, series.log_empirical, atol=1e-12)
    assert np.all(series.log_empirical <= 0) and np.all(np.isfinite(series.log_model))
    assert not series.clamped.any()
    assert len(series.points) == 500


@pytest.mark.parametrize("side", ["left", "right"])
def test_tailplot_true_model_inner_band(gpd_model, side):
    n = 10**4
    x = gpd_model.sample(np.random.default_rng(77), n)
    s = tail_plot_series(x, gpd_model, side)
    inner = slice(n // 200, n - n // 200)
    assert np.max(np.abs(s.log_model[inner] - s.log_empirical[inner])) < 0.5


def test_tailplot_guards_and_clamping():
    with pytest.raises(DataError):
        tail_plot_series(np.arange(9.0), stats.norm.cdf)
    with pytest.raises(ValueError):
        tail_plot_series(np.arange(10.0), stats.norm.cdf, "middle")
    x = np.r_[np.linspace(-1, 1, 10), 60.0]
    s = tail_plot_series(x, stats.norm(), "right")
    assert s.clamped[-1] and not s.clamped[:-1].any()
    assert s.log_model[-1] == pytest.approx(np.log(1e-300))
    s = tail_plot_series(x, stats.norm.cdf, "right")
    assert s.clamped[-1]
