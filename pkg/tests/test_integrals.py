import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from framequant import frames, integrals, pcm
from framequant.integrals import RadialSpec


def oracle_2d(r, delta, d=2):
    """``int_0^pi Delta(r cos t) cos t sin^(d-2) t dt`` by adaptive quadrature split at the jumps."""
    R = r / delta
    half = np.arange(-math.ceil(R) - 1, math.ceil(R) + 2) + 0.5
    c = half / R
    pts = np.sort(np.arccos(c[(c > -1) & (c < 1)]))
    edges = np.concatenate([[0.0], pts, [math.pi]])

    def f(t):
        return pcm.quantization_residual(r * math.cos(t), delta) * math.cos(t) * math.sin(t) ** (d - 2)

    return math.fsum(integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(edges[:-1], edges[1:]))


def test_half_ratio_value():
    for delta in (1.0, 0.2, 1 / 16):
        spec = RadialSpec(0.5 * delta, delta)
        for method in ("quadrature", "closed_sum", "breakpoint_sum", "analytic_small"):
            assert integrals.delta_integral_2d(spec, method) == pytest.approx(math.pi * delta / 2, rel=1e-13)


def test_five_halves_value():
    spec = RadialSpec(0.5, 0.2)
    s = 0.8 * (math.sqrt(6) + 2)
    expected = 0.2 * (2.5 * math.pi - 2 * s)
    assert integrals.delta_integral_2d(spec, "closed_sum") == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.14696, abs=5e-6)
    assert integrals.delta_integral_2d(spec, "quadrature") == pytest.approx(expected, rel=1e-12)


def test_analytic_small_example():
    spec = RadialSpec(0.4, 0.6)
    expected = 0.4 * math.pi - 2.4 * math.sqrt(1 - 0.36 / 0.64)
    for method in integrals.METHODS_2D:
        assert integrals.delta_integral_2d(spec, method) == pytest.approx(expected, rel=1e-12)


def test_analytic_small_outside_branch():
    with pytest.raises(ValueError):
        integrals.delta_integral_2d(RadialSpec(1.0, 0.3), "analytic_small")
    with pytest.raises(ValueError):
        integrals.delta_integral_2d(RadialSpec(1.0, 0.3), "nope")


def test_closed_sum_strict():
    with pytest.raises(ValueError):
        integrals.delta_integral_2d(RadialSpec(1.0, 0.3), "closed_sum", strict=True)
    spec = RadialSpec(1.0, 0.3)
    assert integrals.delta_integral_2d(spec, "closed_sum") == integrals.delta_integral_2d(spec, "breakpoint_sum")


def test_eps_snapping():
    assert RadialSpec(0.5, 0.2).eps_zero
    assert RadialSpec(0.5, 0.2).top_level == 3
    assert RadialSpec(1.0, 0.3).eps == pytest.approx((1 / 0.3 + 0.5) % 1.0, abs=1e-12)
    with pytest.raises(ValueError):
        RadialSpec(0.0, 1.0)


@pytest.mark.parametrize("r,delta", [(0.5, 0.2), (1.0, 0.3), (3.7, 0.05), (0.31, 0.5), (12.25, 0.5), (2.0, 7.0)])
def test_routes_match_adaptive_oracle(r, delta):
    spec = RadialSpec(r, delta)
    ref = 2 * oracle_2d(r, delta)
    for method in ("quadrature", "closed_sum", "breakpoint_sum"):
        assert integrals.delta_integral_2d(spec, method) == pytest.approx(ref, abs=1e-11 * max(1, r))


def test_routes_agree_one_ulp_from_half_integer():
    # r/delta lands an ulp above 3/2; every route evaluates the snapped ratio
    delta = 5.648752985219007
    spec = RadialSpec(1.5 * delta, delta)
    assert spec.R != 1.5 and spec.R_eff == 1.5
    exact = delta * (1.5 * math.pi - 4 * math.sqrt(2) / 1.5)
    for method in ("quadrature", "closed_sum", "breakpoint_sum"):
        assert integrals.delta_integral_2d(spec, method) == pytest.approx(exact, rel=1e-13)
    for method in integrals.METHODS_HIGHD:
        assert 2 * integrals.delta_integral_highd(spec, 2, method) == pytest.approx(exact, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(R=st.floats(0.05, 60), delta=st.floats(1e-3, 10))
def test_routes_agree(R, delta):
    spec = RadialSpec(R * delta, delta)
    q = integrals.delta_integral_2d(spec, "quadrature")
    b = integrals.delta_integral_2d(spec, "breakpoint_sum")
    assert q == pytest.approx(b, abs=1e-11 * delta * max(1.0, R))


@settings(max_examples=100, deadline=None)
@given(R=st.floats(0.05, 60), c=st.floats(0.01, 100))
def test_scale_equivariance(R, c):
    base = integrals.delta_integral_2d(RadialSpec(R, 1.0), "breakpoint_sum")
    scaled = integrals.delta_integral_2d(RadialSpec(c * R, c), "breakpoint_sum")
    assert scaled == pytest.approx(c * base, abs=1e-12 * c * max(1.0, R))


@pytest.mark.parametrize("R", [1.5, 2.5, 10.5, 49.5])
def test_half_integer_identity(R):
    res = integrals.verify_half_integer_identity(RadialSpec.from_ratio(R))
    assert res.residual < 1e-12 * R


def test_half_integer_identity_refusals():
    with pytest.raises(ValueError):
        integrals.verify_half_integer_identity(RadialSpec.from_ratio(0.5))
    with pytest.raises(ValueError):
        integrals.verify_half_integer_identity(RadialSpec.from_ratio(1.7))


def test_lower_bound_examples():
    chk = integrals.lower_bound_check(RadialSpec(0.5, 0.2))
    assert chk.holds and chk.mode == "certified"
    assert chk.bound == pytest.approx(integrals.INTEGRAL_BOUND_CONST * 0.2**1.5 / math.sqrt(0.5), rel=1e-15)
    assert chk.bound == pytest.approx(0.09666, abs=1e-5)
    assert integrals.lower_bound_check(RadialSpec.from_ratio(0.5)).holds
    assert integrals.lower_bound_check(RadialSpec(1.0, 0.3)).mode == "report"


def test_lower_bound_on_half_integer_grid():
    for m in range(2, 101):
        chk = integrals.lower_bound_check(RadialSpec.from_ratio(m - 0.5, 0.1))
        assert chk.holds, m


def test_magic_ratio():
    assert integrals.MAGIC_RATIO == pytest.approx(0.5557286658491892, rel=1e-15)
    for delta in (1.0, 1 / 16, 3.0):
        r = integrals.find_rstar(delta)
        assert r / delta == pytest.approx(integrals.MAGIC_RATIO, abs=1e-12)
        assert abs(integrals.delta_integral_2d(RadialSpec(r, delta), "quadrature")) < 1e-12 * max(1, delta)


def test_magic_ratio_kills_fourier_zero_mode():
    assert integrals.hr_fourier(integrals.MAGIC_RATIO, 0).norm < 1e-10
    with pytest.raises(ValueError):
        integrals.find_rstar(0.0)


def test_hr_fourier_zero_mode():
    for R in (0.5, 2.5, 3.7):
        c = integrals.hr_fourier(R, 0).value
        assert c[0].real == pytest.approx(integrals.delta_integral_2d(RadialSpec.from_ratio(R), "quadrature"),
                                          abs=1e-12)
        assert abs(c[1]) < 1e-12


@pytest.mark.parametrize("k", [1, 3, 5, 17, 101])
def test_hr_fourier_odd_modes_vanish(k):
    assert integrals.hr_fourier(2.5, k).norm < 1e-12
    assert integrals.hr_fourier(3.7, k).norm < 1e-12


@pytest.mark.parametrize("R,k", [(2.5, 4), (3.7, 2), (0.9, 6), (12.5, 40), (3.7, 256)])
def test_hr_fourier_exact_matches_grid(R, k):
    exact = integrals.hr_fourier(R, k).value
    grid = integrals.hr_fourier(R, k, method="grid").value
    np.testing.assert_allclose(grid, exact, rtol=0, atol=1e-9)
    finer = integrals.hr_fourier(R, k, samples=1 << 16, method="grid").value
    assert np.max(np.abs(finer - grid)) < 1e-9


def test_hr_fourier_validation():
    with pytest.raises(ValueError):
        integrals.hr_fourier(2.5, 2, samples=1000, method="grid")
    with pytest.raises(ValueError):
        integrals.hr_fourier(2.5, 2, method="other")


def test_avg_error_below_first_level():
    f = frames.harmonic_frame(2, 16)
    spec = RadialSpec(0.04, 0.1)
    assert integrals.avg_error_direct(f, spec) == pytest.approx(0.04 * math.sqrt(2 * math.pi), rel=1e-13)


def test_avg_error_direct_bound():
    spec = RadialSpec(0.5, 0.2)
    val = integrals.avg_error_direct(frames.harmonic_frame(2, 64), spec)
    assert val >= integrals.AVG_BOUND_CONST * 0.2**1.5 / math.sqrt(0.5)


def test_avg_error_direct_against_sampling():
    f = frames.harmonic_frame(2, 32)
    spec = RadialSpec(0.5, 0.2)
    psi = (np.arange(1 << 16) + 0.5) * 2 * math.pi / (1 << 16)
    e2 = [pcm.error(f, [0.5 * math.cos(p), 0.5 * math.sin(p)], 0.2) ** 2 for p in psi[::16]]
    crude = math.sqrt(2 * math.pi * np.mean(e2))
    assert integrals.avg_error_direct(f, spec) == pytest.approx(crude, rel=2e-3)


def test_avg_error_fourier_matches_direct():
    spec = RadialSpec(0.5, 0.2)
    direct = integrals.avg_error_direct(frames.harmonic_frame(2, 32), spec)
    assert integrals.avg_error_fourier(32, spec) == pytest.approx(direct, rel=1e-6)


def test_avg_error_fourier_zero_mode():
    spec = RadialSpec(0.5, 0.2)
    zero = integrals.avg_error_fourier(32, spec, kmax=0)
    expected = math.sqrt(2) * 0.2 / math.sqrt(math.pi) * integrals.hr_fourier(2.5, 0).norm
    assert zero == pytest.approx(expected, rel=1e-14)
    assert zero <= integrals.avg_error_fourier(32, spec)
    with pytest.raises(ValueError):
        integrals.avg_error_fourier(0, spec)


def test_avg_error_direct_needs_tight_plane_frame():
    with pytest.raises(ValueError):
        integrals.avg_error_direct(frames.harmonic_frame(3, 8), RadialSpec(0.5, 0.2))


def test_highd_reduces_to_plane():
    for r, delta in [(0.5, 0.2), (1.0, 0.3), (0.4, 0.6)]:
        spec = RadialSpec(r, delta)
        for method in integrals.METHODS_HIGHD:
            assert 2 * integrals.delta_integral_highd(spec, 2, method) == pytest.approx(
                integrals.delta_integral_2d(spec, "quadrature"), abs=1e-12)


@pytest.mark.parametrize("d", [3, 4, 5, 7])
@pytest.mark.parametrize("r,delta", [(0.5, 0.2), (1.0, 0.3), (5.25, 0.5)])
def test_highd_routes_match_oracle(d, r, delta):
    spec = RadialSpec(r, delta)
    ref = oracle_2d(r, delta, d)
    for method in integrals.METHODS_HIGHD:
        assert integrals.delta_integral_highd(spec, d, method) == pytest.approx(ref, abs=1e-11)


def test_highd_strict_and_validation():
    with pytest.raises(ValueError):
        integrals.delta_integral_highd(RadialSpec(1.0, 0.3), 3, "breakpoint_sum", strict=True)
    with pytest.raises(ValueError):
        integrals.delta_integral_highd(RadialSpec(1.0, 0.3), 1)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_highd_constant_bounded(d):
    vals = np.array([integrals.highd_constant(RadialSpec.from_ratio(m - 0.5, 1 / (m - 0.5)), d) for m in range(2, 200)])
    assert np.all(vals > 0) and np.all(np.isfinite(vals))
    # saturates along the grid: the far half adds at most 1% over the near half
    assert vals[vals.size // 2 :].max() <= 1.01 * vals[: vals.size // 2].max()


def test_weights():
    for d in (2, 3, 4, 6):
        w = integrate.quad(lambda t: math.cos(t) ** 2 * math.sin(t) ** (d - 2), 0, math.pi)[0]
        s = integrate.quad(lambda t: math.sin(t) ** (d - 2), 0, math.pi)[0]
        assert integrals.cos2_weight(d) == pytest.approx(w, rel=1e-12)
        assert integrals.sphere_weight(d) == pytest.approx(s, rel=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_sphere_limit_below_first_level(d):
    x = np.zeros(d)
    x[0] = 0.03
    assert integrals.sphere_limit_error(x, 0.1) == pytest.approx(0.03, rel=1e-13)


def test_sphere_limit_validation():
    with pytest.raises(ValueError):
        integrals.sphere_limit_error([0.0, 0.0], 0.1)
    with pytest.raises(ValueError):
        integrals.sphere_limit_error([1.0], 0.1)


def test_sphere_limit_against_harmonic_frames():
    # single-N values scatter by a few percent around the limit; a window mean settles it
    x = (math.pi, math.e)
    limit = integrals.sphere_limit_error(x, 1 / 16)
    errs = [pcm.error(frames.harmonic_frame(2, n), x, 1 / 16) for n in range(4000, 4200)]
    assert np.mean(errs) == pytest.approx(limit, rel=0.01)
    assert pcm.error(frames.harmonic_frame(2, 4096), x, 1 / 16) == pytest.approx(limit, rel=0.03)


def test_sphere_limit_against_random_frame_average():
    x = np.array([1.0, 2.0, 3.0]) / math.sqrt(14)
    f = frames.funtf_equidistributed(3, 4096, seed=0)
    assert pcm.error(f, x, 0.4) == pytest.approx(integrals.sphere_limit_error(x, 0.4), rel=0.1)
