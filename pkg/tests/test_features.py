import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phoneslip.errors import EmptySeries, TooShort
from phoneslip.features import (
    FEATURE_NAMES,
    extract_sample_features,
    feature_index,
    fft5,
    mean,
    rms,
    variance,
    zcr,
)
from phoneslip.fft import fft
from phoneslip.ingest import CaseLabel, SensorTrace
from phoneslip.synthgen import MotionModelParams, generate_trace


def dft_bins(x, bins):
    """Direct evaluation of sum_n x[n] * exp(-2*pi*i*k*n/N) for the requested bins."""
    n = len(x)
    out = []
    for k in bins:
        ang = [2.0 * math.pi * ((k * j) % n) / n for j in range(n)]
        re = math.fsum(v * math.cos(a) for v, a in zip(x, ang))
        im = -math.fsum(v * math.sin(a) for v, a in zip(x, ang))
        out.append(complex(re, im))
    return np.array(out)


finite = st.floats(-1e3, 1e3, allow_nan=False)
series = st.lists(finite, min_size=16, max_size=64)


def test_mean_examples():
    assert mean([1, 2, 3]) == 2
    assert mean([4.25] * 17) == 4.25
    with pytest.raises(EmptySeries):
        mean([])


def test_variance_examples(rng):
    assert variance([1, 2, 3]) == pytest.approx(2 / 3, rel=1e-15)
    assert variance([7.0] * 10) == 0
    x = rng.normal(3.0, 2.0, 1000)
    xbar = math.fsum(x) / len(x)
    oracle = math.fsum((v - xbar) ** 2 for v in x) / len(x)
    assert variance(x) == pytest.approx(oracle, rel=1e-12)


def test_rms_examples(rng):
    assert rms([3, 4]) == pytest.approx(math.sqrt(12.5), rel=1e-15)
    assert rms([-2.5] * 9) == 2.5
    x = rng.normal(size=1000)
    assert rms(x) == pytest.approx(math.sqrt(math.fsum(v * v for v in x) / len(x)), rel=1e-12)


def test_zcr_examples():
    assert zcr([1, -1, 1, -1]) == 3
    assert zcr([0.1, 2, 3, 4]) == 0
    assert zcr([1, 0, -1]) == 1
    assert zcr([0, 0, 0]) == 0
    with pytest.raises(TooShort):
        zcr([1.0])


def test_fft5_examples():
    assert np.all(fft5(np.full(256, 3.7)) < 1e-9)
    n = np.arange(256)
    mags = fft5(np.cos(2 * np.pi * 2 * n / 256))
    np.testing.assert_allclose(mags, [0, 128, 0, 0, 0], atol=1e-9)
    with pytest.raises(TooShort):
        fft5(np.ones(15))


def test_fft5_matches_direct_dft(rng):
    for _ in range(10):
        x = rng.normal(size=256)
        np.testing.assert_allclose(fft5(x), np.abs(dft_bins(x, range(1, 6))), rtol=0, atol=1e-9)


@pytest.mark.parametrize("n", [16, 32, 64, 128, 256, 512, 24, 100])
def test_fast_transform_matches_definition(n, rng):
    x = rng.normal(size=n)
    k = np.arange(n)
    oracle = np.exp(-2j * np.pi * (np.outer(k, k) % n) / n) @ x
    np.testing.assert_allclose(fft(x), oracle, rtol=0, atol=1e-9)
    # Parseval over the full transform
    assert np.sum(np.abs(fft(x)) ** 2) / n == pytest.approx(np.sum(x * x), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(x=series, a=st.floats(-50, 50, allow_nan=False).filter(lambda v: abs(v) > 1e-3))
def test_scaling_properties(x, a):
    x = np.array(x)
    ax = a * x
    assert mean(ax) == pytest.approx(a * mean(x), rel=1e-10, abs=1e-9)
    assert variance(ax) == pytest.approx(a * a * variance(x), rel=1e-10, abs=1e-9)
    assert rms(ax) == pytest.approx(abs(a) * rms(x), rel=1e-10, abs=1e-12)
    np.testing.assert_allclose(fft5(ax), abs(a) * fft5(x), rtol=1e-10, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(x=series, c=finite, a=st.floats(1e-3, 1e3))
def test_shift_and_positive_scale_invariance(x, c, a):
    x = np.array(x)
    spread = float(np.max(np.abs(x))) + abs(c) + 1.0
    assert variance(x + c) == pytest.approx(variance(x), rel=1e-9, abs=1e-12 * spread**2)
    assert zcr(a * x) == zcr(x)


def test_feature_names_layout():
    assert len(FEATURE_NAMES) == 54
    assert FEATURE_NAMES[0] == "accel_x_mean"
    assert FEATURE_NAMES[9 + 4 + 2] == "accel_y_fft3"
    assert FEATURE_NAMES[27] == "orient_azimuth_mean"
    assert FEATURE_NAMES[-1] == "orient_roll_fft5"
    assert feature_index("accel", "x", "fft3") == 6


def test_all_zero_trace_gives_zero_vector():
    tr = SensorTrace(CaseLabel.A, 0, 50.0, np.zeros((256, 3)), np.zeros((256, 3)))
    v = extract_sample_features(tr)
    assert v.shape == (54,)
    assert np.all(v == 0)


def test_known_signal_lands_at_documented_index():
    n = np.arange(256)
    accel = np.zeros((256, 3))
    accel[:, 0] = np.cos(2 * np.pi * 3 * n / 256)
    v = extract_sample_features(SensorTrace(CaseLabel.A, 0, 50.0, accel, np.zeros((256, 3))))
    hits = np.flatnonzero(v > 1.0)
    assert [FEATURE_NAMES[i] for i in hits] == ["accel_x_zcr", "accel_x_fft3"]
    i = feature_index("accel", "x", "fft3")
    assert v[i] == pytest.approx(128.0, abs=1e-9)
    assert abs(v[i - 1]) < 1e-9 and abs(v[i + 1]) < 1e-9


def test_feature_vector_invariants(default_traces):
    for tr in default_traces[::7]:
        v = extract_sample_features(tr).reshape(6, 9)
        assert np.all(v[:, 1] >= 0) and np.all(v[:, 2] >= 0)
        assert np.all(v[:, 3] == np.round(v[:, 3])) and np.all((v[:, 3] >= 0) & (v[:, 3] <= 255))
        assert np.all(v[:, 4:] >= 0)


def test_free_fall_segment_mean_is_near_zero():
    params = MotionModelParams()
    tr = generate_trace(CaseLabel.F, 7, params)
    mag = np.linalg.norm(tr.accel, axis=1)
    low = mag < 1.0
    # longest run of low-magnitude samples, found by brute force
    best = (0, 0)
    for i in range(len(mag)):
        j = i
        while j < len(mag) and low[j]:
            j += 1
        if j - i > best[1] - best[0]:
            best = (i, j)
    seg = tr.accel[best[0]:best[1], 2]
    assert len(seg) >= 10
    assert abs(mean(seg)) <= 3 * params.noise_sigma_accel / math.sqrt(len(seg))
