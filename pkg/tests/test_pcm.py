import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framequant import frames, pcm
from framequant.frames import Frame


def test_quantize_value_examples():
    assert pcm.quantize_value(0.0, 0.25) == 0.0
    assert pcm.quantize_value(0.5, 1.0) == 1.0
    assert pcm.quantize_value(-0.5, 1.0) == 0.0
    assert pcm.quantize_value(math.pi, 1 / 16) == 3.125


def test_quantize_value_rejects_non_finite():
    for bad in (math.inf, -math.inf, math.nan):
        with pytest.raises(ValueError):
            pcm.quantize_value(bad, 0.1)
    with pytest.raises(ValueError):
        pcm.quantize(1.0, 0.0)


def test_residual_range_on_many_points():
    rng = np.random.default_rng(0)
    for delta in (1.0, 0.1, 1 / 16, 3e-4, 7.25):
        t = rng.uniform(-1e3, 1e3, 1_000_000) * delta
        y = pcm.quantization_residual(t, delta)
        assert np.all(y >= -delta / 2)
        assert np.all(y < delta / 2)


def test_residual_range_at_midpoints():
    delta = 0.1
    k = np.arange(-1000, 1000)
    t = (k + 0.5) * delta  # rounded midpoints, both sides of the exact tie
    t = np.concatenate([t, np.nextafter(t, np.inf), np.nextafter(t, -np.inf)])
    y = pcm.quantization_residual(t, delta)
    assert np.all((y >= -delta / 2) & (y < delta / 2))


@settings(max_examples=200, deadline=None)
@given(t=st.floats(-1e6, 1e6), k=st.integers(-1000, 1000), e=st.integers(-8, 3))
def test_shift_equivariance(t, k, e):
    delta = 2.0**e
    q = pcm.quantize(t, delta)
    shifted = t + k * delta
    if shifted - k * delta != t:
        return  # t + k delta is not exact in floating point
    assert pcm.quantize(shifted, delta) == q + k * delta


def test_quantized_expansion_fields():
    f = frames.harmonic_frame(2, 7)
    _, exp, _ = pcm.reconstruct_quantized(f, [0.3, -1.1], 0.25)
    np.testing.assert_array_equal(exp.quantized, pcm.quantize(exp.coefficients, 0.25))
    assert np.all(np.abs(exp.residuals) <= 0.125)
    u = exp.partial_sums
    assert u[0] == 0.0
    np.testing.assert_allclose(np.diff(u), exp.residuals, atol=1e-15)
    np.testing.assert_array_equal(exp.levels * 0.25, exp.quantized)


def test_analyze_examples():
    f4 = frames.harmonic_frame(2, 4)
    np.testing.assert_allclose(pcm.analyze(f4, [1, 0]), [1, 0, -1, 0], atol=1e-15)
    np.testing.assert_array_equal(pcm.analyze(f4, [0, 0]), 0.0)
    c = pcm.analyze(frames.harmonic_frame(2, 3), [math.pi, math.e])
    s3 = math.sqrt(3) / 2
    np.testing.assert_allclose(c, [math.pi, -math.pi / 2 + math.e * s3, -math.pi / 2 - math.e * s3], rtol=1e-14)
    with pytest.raises(ValueError):
        pcm.analyze(f4, [1, 2, 3])


def test_small_signal_quantizes_to_zero():
    f = frames.harmonic_frame(2, 50)
    x = np.array([0.03, -0.02])
    x_tilde, exp, rep = pcm.reconstruct_quantized(f, x, 0.1)
    np.testing.assert_array_equal(exp.quantized, 0.0)
    np.testing.assert_array_equal(x_tilde, 0.0)
    assert rep.error == pytest.approx(np.linalg.norm(x))


def test_zero_signal_has_zero_error():
    assert pcm.error(frames.harmonic_frame(3, 11), np.zeros(3), 0.3) == 0.0


def test_reconstruction_without_quantization():
    rng = np.random.default_rng(1)
    for d, n in [(2, 5), (3, 9), (4, 13)]:
        f = frames.harmonic_frame(d, n)
        x = rng.normal(size=d)
        c = pcm.analyze(f, x)
        np.testing.assert_allclose(d / n * c @ f.vectors, x, rtol=1e-12)


def test_harmonic_error_point():
    e = pcm.error(frames.harmonic_frame(2, 1000), [math.pi, math.e], 1 / 16)
    # brute-force value at N = 1000; the plateau sits near 2.6e-3
    assert 1e-3 < e < 5e-3


def test_refuses_non_tight():
    f = Frame(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(pcm.NonTightFrameError):
        pcm.reconstruct_quantized(f, [1.0, 1.0], 0.1)


@settings(max_examples=60, deadline=None)
@given(
    d=st.integers(2, 5),
    extra=st.integers(1, 40),
    x=st.lists(st.floats(-50, 50), min_size=5, max_size=5),
    delta=st.floats(1e-3, 5.0),
)
def test_error_within_triangle_bound(d, extra, x, delta):
    f = frames.harmonic_frame(d, d + extra)
    _, exp, rep = pcm.reconstruct_quantized(f, x[:d], delta)
    assert rep.error >= 0
    assert rep.error <= d / f.n * np.sum(np.abs(exp.residuals)) + 1e-12
    assert rep.error <= d * delta / 2 + 1e-12


def test_error_report_json():
    _, _, rep = pcm.reconstruct_quantized(frames.harmonic_frame(2, 8), [0.4, 0.1], 0.1)
    data = json.loads(rep.to_json())
    assert set(data) == {"error", "N", "d", "delta", "norm_x"}
    assert data["N"] == 8 and data["d"] == 2


def test_mse_wnh():
    assert pcm.mse_wnh(2, 64, 0.1) == pytest.approx(4 * 0.01 / 768, rel=1e-15)
    assert pcm.mse_wnh(3, 10, 0.0) == 0.0
    assert pcm.mse_wnh(2, 128, 0.1) == pytest.approx(pcm.mse_wnh(2, 64, 0.1) / 2, rel=1e-15)
    with pytest.raises(ValueError):
        pcm.mse_wnh(3, 2, 0.1)


def test_wnh_mse_matches_model():
    f = frames.harmonic_frame(2, 64)
    res = pcm.wnh_simulate(f, 0.1, 200_000, 0.25, seed=7)
    # standard error of the mean of squared errors is a few tenths of a percent here
    assert res.empirical_mse == pytest.approx(res.mse_theory, rel=0.02)
    assert res.generator == "PCG64"
    assert res.seed == 7


def test_wnh_zero_step():
    res = pcm.wnh_simulate(frames.harmonic_frame(2, 16), 0.0, 1000, 0.2, seed=0)
    assert res.mse == 0.0 and res.max_error == 0.0
    assert res.bound_violation_rate == 0.0


def test_wnh_violation_rate():
    f = frames.harmonic_frame(2, 256)
    res = pcm.wnh_simulate(f, 0.1, 20_000, 0.25, seed=3)
    assert res.bound_violation_rate <= res.theoretical_rate
    assert res.theoretical_rate == pytest.approx(2 * 256 * math.exp(-2 * 256**0.5))


def test_wnh_independent_of_threads_and_chunking():
    f = frames.harmonic_frame(3, 20)
    a = pcm.wnh_simulate(f, 0.2, 5000, 0.25, seed=9, chunk=1000, threads=1)
    b = pcm.wnh_simulate(f, 0.2, 5000, 0.25, seed=9, chunk=1000, threads=4)
    assert a == b
    c = pcm.wnh_simulate(f, 0.2, 5000, 0.25, seed=10, chunk=1000)
    assert c.mse != a.mse


def test_wnh_validates_inputs():
    f = frames.harmonic_frame(2, 8)
    with pytest.raises(ValueError):
        pcm.wnh_simulate(f, 0.1, 0, 0.25, seed=0)
    with pytest.raises(ValueError):
        pcm.wnh_simulate(f, 0.1, 10, 0.5, seed=0)
