import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from tailmix.errors import ConstructionError, InvalidWarpError, ParameterError
from tailmix.transform_model import (TailWarp, TransformModel, WarpMode, asymptotic_log_density_rate,
                                     build_transform, local_log_density_rate, transform_cdf,
                                     transform_log_pdf, transform_pdf, transform_quantile,
                                     transform_sample, warp_coeffs, warp_q, warp_q_inverse, warp_q_prime)

C12, FULL = WarpMode.PAPER_C12, WarpMode.FULL_C2


def tail_map(u, beta, x):
    """f, f', f'' of u (x/u)**beta for x > 0 < u."""
    r = x / u
    return u * r**beta, beta * r ** (beta - 1), beta * (beta - 1) / u * r ** (beta - 2)


@pytest.fixture(scope="module", params=[C12, FULL])
def ref_model(request):
    return build_transform(-1.5, 1.5, 0.45, 1.0, 0.6, eps=1.0, mode=request.param)


def test_c12_coefficients():
    c, d = warp_coeffs(1.5, 0.6, 1.0, C12)
    f, f1, f2 = tail_map(1.5, 0.6, 2.5)
    assert f1 == pytest.approx(0.48912, abs=1e-5)
    assert f2 == pytest.approx(-0.078259, abs=1e-6)
    # closed forms with k1 = 4, k2 = 3 and span 2 eps = 2
    d_ref = (f1 - 1 - 2 / 3 * f2) / ((1 / 2 - 1 / 3) * 2**2)
    c_ref = (f2 - d_ref * 2) / 2**2
    assert d == pytest.approx(d_ref, rel=1e-12)
    assert c == pytest.approx(c_ref, rel=1e-12)
    assert d == pytest.approx(-0.68805, abs=1e-4)
    assert c == pytest.approx(0.32446, abs=1e-4)


@pytest.mark.parametrize("mode", [C12, FULL])
def test_identity_tail_has_no_correction(mode):
    assert all(v == pytest.approx(0.0, abs=1e-12) for v in warp_coeffs(1.5, 1.0, 0.7, mode))


def test_full_coefficients_match_tail_at_zone_end():
    w = TailWarp(1.5, 0.6, 1.0, FULL)
    f, f1, f2 = tail_map(1.5, 0.6, 2.5)
    assert f == pytest.approx(2.0380, abs=1e-4)
    x = np.nextafter(2.5, 0)
    assert w.q(x) == pytest.approx(f, abs=1e-9)
    assert w.q_prime(x) == pytest.approx(f1, abs=1e-9)
    assert w.q_second(x) == pytest.approx(f2, abs=1e-9)
    assert w.value_gap() == pytest.approx(0.0, abs=1e-12)


def test_warp_examples():
    w = TailWarp(1.5, 0.6, 1.0)
    assert warp_q(w, 3.0) == pytest.approx(1.5 * 2**0.6, rel=1e-14)
    assert warp_q(w, 3.0) == pytest.approx(2.27358, abs=1e-5)
    assert warp_q(w, 0.3) == 0.3
    assert warp_q(w, -4.0) == -4.0
    assert warp_q_prime(w, 0.3) == 1.0
    x = np.linspace(2.5, 100, 200)
    np.testing.assert_allclose(warp_q_inverse(w, warp_q(w, x)), x, atol=1e-9)


@pytest.mark.parametrize("mode", [C12, FULL])
def test_warp_inverse_round_trip_everywhere(mode):
    w = TailWarp(1.5, 0.6, 1.0, mode)
    x = np.linspace(-3, 60, 5001)
    np.testing.assert_allclose(w.q_inverse(w.q(x)), x, atol=1e-9)
    lw = TailWarp(-1.5, 0.45, 1.0, mode)
    np.testing.assert_allclose(lw.q_inverse(lw.q(-x)), -x, atol=1e-9)


def test_geometry_errors():
    with pytest.raises(ConstructionError):
        TailWarp(0.5, 0.6, 1.0)
    with pytest.raises(ParameterError):
        TailWarp(0.0, 0.6, 1.0)
    with pytest.raises(ParameterError):
        TailWarp(1.5, -0.6, 1.0)
    with pytest.raises(ParameterError):
        TailWarp(1.5, 0.6, 0.0)
    with pytest.raises(ConstructionError):
        TransformModel(1.0, left=TailWarp(1.5, 0.6, 1.0))


def test_non_monotone_warp_rejected():
    # a steep exponent over a long zone forces the bridge to turn back
    with pytest.raises(InvalidWarpError):
        TailWarp(1.05, 6.0, 1.0, C12)


def test_no_warps_is_normal():
    m = TransformModel(1.3)
    x = np.linspace(-6, 6, 101)
    np.testing.assert_allclose(transform_cdf(m, x), stats.norm.cdf(x, scale=1.3), rtol=1e-14)
    np.testing.assert_allclose(transform_pdf(m, x), stats.norm.pdf(x, scale=1.3), rtol=1e-13)


def test_reference_quantiles(ref_model):
    q = transform_quantile(ref_model, np.array([0.001, 0.99, 0.999]))
    assert q[0] == pytest.approx(-7.49, abs=0.06)
    assert q[0] == pytest.approx(-7.51, abs=0.06)
    assert q[1] == pytest.approx(3.13, abs=0.06)
    assert transform_quantile(ref_model, 0.01) == pytest.approx(-3.99, abs=0.06)
    assert q[2] == pytest.approx(5.01, abs=0.06)
    assert q[2] == pytest.approx(5.02, abs=0.06)


def test_median_of_symmetric_model():
    m = build_transform(-1.5, 1.5, 0.6, 1.0, 0.6)
    assert transform_quantile(m, 0.5) == 0.0
    x = np.linspace(0, 20, 50)
    np.testing.assert_allclose(m.pdf(x), m.pdf(-x), rtol=1e-14)


def test_quantile_inverts_cdf(ref_model):
    p = np.linspace(1e-6, 1 - 1e-6, 2001)
    x = ref_model.ppf(p)
    assert np.all(np.diff(x) >= 0)
    if ref_model.right.mode is FULL:
        np.testing.assert_allclose(ref_model.cdf(x), p, atol=1e-12)
    with pytest.raises(ParameterError):
        ref_model.ppf(1.0)


def test_c12_gap_quantile_maps_to_zone_end():
    m = build_transform(None, 1.5, 1.0, 1.0, 0.6, mode=C12)
    inner, outer = m.right.zone_end_values()
    p = special.ndtr(0.5 * (inner + outer))
    assert m.ppf(p) == pytest.approx(2.5, abs=1e-12)


def test_sampling():
    m = build_transform(-1.5, 1.5, 0.45, 1.0, 0.6)
    assert transform_sample(m, np.random.default_rng(0), 0).shape == (0,)
    x = transform_sample(m, np.random.default_rng(2), 10**5)
    assert stats.kstest(x, m.cdf).statistic < 0.006
    assert np.array_equal(x, transform_sample(m, np.random.default_rng(2), 10**5))


def test_full_mode_integrates_to_one():
    m = build_transform(-1.5, 1.5, 0.45, 1.0, 0.6, mode=FULL)
    pts = [-np.inf, -2.5, -0.5, 0.5, 2.5, np.inf]
    total = sum(integrate.quad(lambda t: float(m.pdf(t)), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                for a, b in zip(pts[:-1], pts[1:]))
    assert total == pytest.approx(1.0, abs=1e-6)


def _c12_mass(m):
    pts = [-np.inf, -2.5, -0.5, 0.5, 2.5, np.inf]
    return sum(integrate.quad(lambda t: float(m.pdf(t)), a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
               for a, b in zip(pts[:-1], pts[1:]))


def test_c12_mode_missing_mass_is_the_cdf_jumps():
    m = build_transform(-1.5, 1.5, 0.45, 1.0, 0.6, mode=C12)
    jumps = 0.0
    for w in (m.left, m.right):
        inner, outer = w.zone_end_values()
        jumps += special.ndtr(outer) - special.ndtr(inner)
    assert 1.0 - _c12_mass(m) == pytest.approx(jumps, abs=1e-9)


def test_c12_mode_mass_within_two_permille():
    m = build_transform(-1.5, 1.5, 0.45, 1.0, 0.6, mode=C12)
    assert _c12_mass(m) == pytest.approx(1.0, abs=2e-3)


def test_c12_mode_value_gap_reported():
    m = build_transform(-1.5, 1.5, 0.45, 1.0, 0.6, mode=C12)
    gaps = m.value_gaps()
    assert gaps["right"] == pytest.approx(0.0228, abs=5e-4)
    w = m.right
    # slope and curvature still agree across the outer edge
    lo, hi = np.nextafter(2.5, 0), 2.5
    assert w.q_prime(lo) == pytest.approx(w.q_prime(hi), abs=1e-12)
    assert w.q_second(lo) == pytest.approx(w.q_second(hi), abs=1e-12)


@pytest.mark.parametrize("u,beta", [(-1.5, 0.45), (1.5, 0.6), (2.0, 1.7), (-0.8, 2.5)])
def test_full_mode_c2_at_all_edges(u, beta):
    w = TailWarp(u, beta, 0.5 if abs(u) < 1 else 1.0, FULL)
    a, e = abs(u), w.eps
    for edge in (a - e, a + e):
        x = w.sign * edge
        lo, hi = np.nextafter(x, -np.inf), np.nextafter(x, np.inf)
        for fn in (w.q, w.q_prime, w.q_second):
            assert fn(lo) == pytest.approx(fn(hi), abs=1e-9)


def test_pdf_matches_cdf_difference():
    m = build_transform(-1.5, 1.5, 0.45, 1.0, 0.6, mode=FULL)
    x = np.linspace(-15, 15, 3001)
    x = x[np.min(np.abs(x[:, None] - np.array([-2.5, -0.5, 0.5, 2.5])[None, :]), axis=1) > 1e-4]
    h = 1e-6
    # difference the survival function on the right to avoid cancellation near 1
    fd = np.where(x < 0, m.cdf(x + h) - m.cdf(x - h), m.sf(x - h) - m.sf(x + h)) / (2 * h)
    np.testing.assert_allclose(fd, m.pdf(x), rtol=1e-6, atol=1e-13)
    np.testing.assert_allclose(np.exp(transform_log_pdf(m, x)), m.pdf(x), rtol=1e-14)


@pytest.mark.parametrize("beta", [0.45, 0.6, 0.8])
def test_heavier_tail_for_small_exponent(beta):
    m = build_transform(None, 1.5, 1.0, 1.0, beta)
    x = np.linspace(2.6, 30, 100)
    assert np.all(np.abs(m.q(x)) < x)
    assert np.all(m.sf(x) > stats.norm.sf(x))


def test_lighter_tail_for_large_exponent():
    m = build_transform(None, 1.5, 1.0, 1.0, 1.5)
    x = np.linspace(2.6, 8, 50)
    assert np.all(m.q(x) > x)
    assert np.all(m.sf(x) < stats.norm.sf(x))


@pytest.mark.parametrize("beta", [0.45, 0.6, 0.8])
def test_log_density_ratio_at_fifty_u(beta):
    m = build_transform(None, 1.5, 1.0, 1.0, beta)
    x = 50 * 1.5
    target = asymptotic_log_density_rate(m.right, 1.0)
    assert float(m.logpdf(x)) / x ** (2 * beta) == pytest.approx(target, rel=0.05)


@pytest.mark.parametrize("beta", [0.45, 0.6, 0.8])
def test_local_log_density_rate_at_fifty_u(beta):
    m = build_transform(None, 1.5, 1.0, 1.0, beta)
    target = -(1.5 ** (2 - 2 * beta)) / 2
    assert asymptotic_log_density_rate(m.right, 1.0) == pytest.approx(target, rel=1e-14)
    assert local_log_density_rate(m, 75.0) == pytest.approx(target, rel=0.05)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.1, 3.0), st.floats(0.3, 1.5), st.floats(0.3, 2.0), st.floats(0.2, 1.0))
def test_random_full_models_are_proper(u, beta, sigma, eps_frac):
    eps = eps_frac * (u - 0.05)
    try:
        m = build_transform(-u, u, beta, sigma, beta, eps=eps, mode=FULL)
    except InvalidWarpError:
        return
    x = np.linspace(-60, 60, 4001)
    assert np.all(np.diff(m.cdf(x)) >= 0)
    assert np.all(m.q_prime(x) > 0)
