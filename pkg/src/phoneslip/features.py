"""Per-axis statistical and spectral features, assembled into 54-value vectors."""

from __future__ import annotations

import numpy as np

from .errors import EmptySeries, TooShort
from .fft import fft
from .ingest import SensorTrace

PER_AXIS = ("mean", "variance", "rms", "zcr", "fft1", "fft2", "fft3", "fft4", "fft5")
SENSORS = (("accel", ("x", "y", "z")), ("orient", ("azimuth", "pitch", "roll")))
N_FEATURES = 54
MIN_FFT_LENGTH = 16


def feature_names() -> list[str]:
    """Column order of every feature vector, e.g. ``accel_x_fft3``."""
    return [
        f"{sensor}_{axis}_{feat}"
        for sensor, axes in SENSORS
        for axis in axes
        for feat in PER_AXIS
    ]


FEATURE_NAMES = tuple(feature_names())


def feature_index(sensor: str, axis: str, feature: str) -> int:
    return FEATURE_NAMES.index(f"{sensor}_{axis}_{feature}")


def _series(series, min_len: int = 1) -> np.ndarray:
    x = np.asarray(series, dtype=float).ravel()
    if len(x) == 0:
        raise EmptySeries("series is empty")
    if len(x) < min_len:
        raise TooShort(f"series has {len(x)} samples, need at least {min_len}")
    return x


def mean(series) -> float:
    return float(np.mean(_series(series)))


def variance(series) -> float:
    """Population variance (divisor N)."""
    x = _series(series)
    return float(np.mean((x - x.mean()) ** 2))


def rms(series) -> float:
    x = _series(series)
    return float(np.sqrt(np.mean(x * x)))


def zcr(series) -> int:
    """Number of adjacent sample pairs whose signs differ; zero counts as positive."""
    x = _series(series, min_len=2)
    nonneg = x >= 0
    return int(np.count_nonzero(nonneg[1:] != nonneg[:-1]))


def fft5(series) -> np.ndarray:
    """Magnitudes of DFT bins 1..5 (DC skipped, no normalization)."""
    x = _series(series, min_len=MIN_FFT_LENGTH)
    return np.abs(fft(x)[1:6])


def axis_features(series) -> np.ndarray:
    x = _series(series, min_len=MIN_FFT_LENGTH)
    return np.concatenate(([mean(x), variance(x), rms(x), zcr(x)], fft5(x)))


def extract_sample_features(trace: SensorTrace) -> np.ndarray:
    """54 values: accel x/y/z then azimuth/pitch/roll, nine features per axis."""
    channels = np.hstack([trace.accel, trace.orient])
    if len(channels) < MIN_FFT_LENGTH:
        raise TooShort(f"trace has {len(channels)} samples, need at least {MIN_FFT_LENGTH}")
    return np.concatenate([axis_features(channels[:, c]) for c in range(6)])
