"""Seeded synthetic motion models for the six slip cases.

Each generator builds a noise-free trace on the canonical grid (50 Hz, 256
samples), then adds independent Gaussian noise to every channel. Impact peaks
are pinned after noise so the drawn peak magnitude is what the trace shows.

Signatures per case:

* A: phone settles from a slight hand tilt to flat with a gentle placement bump.
* B: hand swing then one sharp impact spike (2g..5g), then rest.
* C: static on an incline, then a sustained slide with pitch drift, then lands flat.
* D: incline slowly rises and halts at the tipping angle; no slide.
* E: toss with a >=180 degree pitch rotation while airborne and a partial accel dip.
* F: free fall (|a| near 0) followed by an impact spike (2g..5g), then rest.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InvalidParams
from .ingest import CANONICAL_LENGTH, CANONICAL_RATE_HZ, CaseLabel, SensorTrace, wrap_angles

Range = tuple[float, float]


@dataclass(frozen=True)
class MotionModelParams:
    gravity: float = 9.81
    noise_sigma_accel: float = 0.15
    noise_sigma_angle: float = 0.5
    settle_time: Range = (0.2, 0.6)  # A, seconds
    placement_bump: Range = (0.3, 0.8)  # A, m/s^2
    impact_peak_g: Range = (2.0, 5.0)  # B and F, multiples of gravity
    incline_angle: Range = (15.0, 35.0)  # C and D, degrees
    free_fall_duration: Range = (0.3, 0.6)  # F, seconds
    flip_rotation: Range = (200.0, 340.0)  # E, degrees
    rate_hz: float = CANONICAL_RATE_HZ
    length: int = CANONICAL_LENGTH

    def validate(self) -> None:
        if not self.gravity > 0:
            raise InvalidParams("gravity must be positive")
        if self.noise_sigma_accel < 0 or self.noise_sigma_angle < 0:
            raise InvalidParams("noise sigmas must be >= 0")
        if self.rate_hz <= 0 or self.length < 16:
            raise InvalidParams("rate_hz must be positive and length >= 16")
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                if len(value) != 2 or not value[0] <= value[1]:
                    raise InvalidParams(f"{f.name} must be a (min, max) pair with min <= max")
                if value[0] < 0:
                    raise InvalidParams(f"{f.name} must be non-negative")
        if self.flip_rotation[0] < 180:
            raise InvalidParams("flip_rotation must be at least 180 degrees")
        if self.impact_peak_g[0] < 1:
            raise InvalidParams("impact_peak_g must be at least 1")
        if self.length / self.rate_hz < 3.0:
            raise InvalidParams("window must span at least 3 seconds")

    @classmethod
    def from_dict(cls, data: dict) -> "MotionModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParams(f"unknown motion parameters: {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def derive_seed(master_seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a (master, key...) tuple."""
    ss = np.random.SeedSequence(master_seed % 2**64, spawn_key=tuple(keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed % 2**64))


def _smoothstep(t: np.ndarray, start: float, end: float) -> np.ndarray:
    """0 before ``start``, 1 from ``end`` on, raised-cosine in between."""
    u = np.clip((t - start) / (end - start), 0.0, 1.0)
    return np.where(u >= 1.0, 1.0, 0.5 - 0.5 * np.cos(np.pi * u))


def _window(t: np.ndarray, start: float, end: float) -> np.ndarray:
    return (t >= start) & (t < end)


def _gravity(pitch_deg: np.ndarray, roll_deg: np.ndarray, g: float) -> np.ndarray:
    p = np.deg2rad(pitch_deg)
    r = np.deg2rad(roll_deg)
    return np.column_stack([-g * np.cos(p) * np.sin(r), g * np.sin(p), g * np.cos(p) * np.cos(r)])


def _bounce(t: np.ndarray, t_start: float, amp: float, freq: float, tau: float) -> np.ndarray:
    dt = t - t_start
    out = amp * np.exp(-np.maximum(dt, 0) / tau) * np.sin(2 * np.pi * freq * dt)
    return np.where(dt > 0, out, 0.0)


class _Builder:
    """Mutable scratch state for one trace."""

    def __init__(self, params: MotionModelParams, rng: np.random.Generator):
        self.p = params
        self.rng = rng
        self.n = params.length
        self.t = np.arange(self.n) / params.rate_hz
        self.duration = self.n / params.rate_hz
        self.azimuth = np.full(self.n, rng.uniform(20.0, 340.0))
        self.pitch = np.zeros(self.n)
        self.roll = np.zeros(self.n)
        self.dynamic = np.zeros((self.n, 3))
        # samples whose accel is replaced outright (free fall, airborne)
        self.override: dict[int, np.ndarray] = {}
        self.pins: list[tuple[int, float]] = []

    def uniform(self, rng_pair: Range) -> float:
        return float(self.rng.uniform(rng_pair[0], rng_pair[1]))

    def event_start(self, event_len: float) -> float:
        """Start time jittered uniformly in the middle 60% of the window."""
        lo = 0.2 * self.duration
        hi = min(0.8 * self.duration, self.duration - event_len - 0.3)
        return float(self.rng.uniform(lo, max(lo, hi)))

    def index_at(self, time: float) -> int:
        return min(int(round(time * self.p.rate_hz)), self.n - 1)

    def impact(self, time: float, peak: float, direction=(0.0, 0.0, 1.0)) -> float:
        """Sharp three-sample spike; the centre sample is pinned to ``peak``."""
        k = self.index_at(time)
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        self.pins.append((k, peak))
        for off, frac in ((-1, 0.35), (1, 0.45), (2, 0.15)):
            if 0 <= k + off < self.n:
                self.dynamic[k + off] += frac * peak * d
        return k / self.p.rate_hz

    def build(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.p.gravity
        accel = _gravity(self.pitch, self.roll, g) + self.dynamic
        for k, vec in self.override.items():
            accel[k] = vec
        orient = np.column_stack([self.azimuth, self.pitch, self.roll])
        accel = accel + self.p.noise_sigma_accel * self.rng.standard_normal((self.n, 3))
        orient = orient + self.p.noise_sigma_angle * self.rng.standard_normal((self.n, 3))
        for k, peak in self.pins:
            norm = np.linalg.norm(accel[k])
            accel[k] = accel[k] * (peak / norm) if norm > 0 else np.array([0.0, 0.0, peak])
        return accel, wrap_angles(orient)


def _normal_touch(b: _Builder) -> None:
    settle = b.uniform(b.p.settle_time)
    t0 = b.event_start(settle)
    hold = 1.0 - _smoothstep(b.t, t0, t0 + settle)
    b.pitch += b.rng.uniform(2.0, 8.0) * hold
    b.roll += b.rng.uniform(-5.0, 5.0) * hold
    u = (b.t - t0) / settle
    inside = _window(b.t, t0, t0 + settle)
    b.dynamic[:, 2] += np.where(inside, b.uniform(b.p.placement_bump) * np.sin(2 * np.pi * u), 0.0)


def _accidental_keep(b: _Builder) -> None:
    g = b.p.gravity
    swing = b.rng.uniform(0.25, 0.4)
    t0 = b.event_start(swing + 0.6)
    t_hit = t0 + swing
    held_pitch = b.rng.uniform(20.0, 45.0)
    held_roll = b.rng.uniform(-10.0, 10.0)
    rest_pitch = b.rng.uniform(-4.0, 4.0)
    rest_roll = b.rng.uniform(-4.0, 4.0)
    s = _smoothstep(b.t, t0, t_hit)
    b.pitch += held_pitch + (rest_pitch - held_pitch) * s
    b.roll += held_roll + (rest_roll - held_roll) * s
    # throwing stroke along the device y axis
    stroke = np.where(_window(b.t, t0, t_hit), np.sin(np.pi * (b.t - t0) / swing), 0.0)
    b.dynamic[:, 1] += b.rng.uniform(3.0, 6.0) * stroke
    peak = b.uniform(b.p.impact_peak_g) * g
    direction = (b.rng.uniform(-0.3, 0.3), b.rng.uniform(-0.3, 0.3), 1.0)
    t_hit = b.impact(t_hit, peak, direction)
    b.dynamic[:, 2] += _bounce(b.t, t_hit + 0.04, 0.15 * peak, b.rng.uniform(6.0, 10.0), 0.08)


def _complete_slip(b: _Builder) -> None:
    g = b.p.gravity
    incline = b.uniform(b.p.incline_angle)
    slide = b.rng.uniform(1.2, 2.0)
    t0 = b.event_start(slide + 0.5)
    t_end = t0 + slide
    drift = b.rng.uniform(4.0, 10.0)
    roll0 = b.rng.uniform(-3.0, 3.0)
    on_slope = b.t < t_end
    drifted = incline + drift * np.clip(b.t - t0, 0.0, slide)
    landed = _smoothstep(b.t, t_end, t_end + 0.25)
    b.pitch += np.where(on_slope, drifted, (incline + drift * slide) * (1.0 - landed))
    b.roll += roll0 * (1.0 - landed)
    # along-slope acceleration reduces the measured y component while sliding
    ramp = _smoothstep(b.t, t0, t0 + 0.1) * (1.0 - _smoothstep(b.t, t_end - 0.1, t_end))
    b.dynamic[:, 1] -= b.rng.uniform(1.0, 3.0) * ramp
    chatter = 0.3 * np.sin(2 * np.pi * b.rng.uniform(10.0, 14.0) * b.t)
    b.dynamic[:, 2] += chatter * ramp
    b.impact(t_end, b.rng.uniform(1.2, 1.6) * g)


def _tipping_point(b: _Builder) -> None:
    incline = b.uniform(b.p.incline_angle)
    rise = b.rng.uniform(1.5, 2.5)
    t0 = b.event_start(rise)
    start_pitch = b.rng.uniform(0.0, 5.0)
    s = _smoothstep(b.t, t0, t0 + rise)
    b.pitch += start_pitch + (incline - start_pitch) * s
    b.roll += b.rng.uniform(-3.0, 3.0)
    # small jolt where the phone is about to let go
    jolt = _window(b.t, t0 + rise, t0 + rise + 0.1)
    b.dynamic[:, 1] += np.where(jolt, -0.5 * np.sin(np.pi * (b.t - t0 - rise) / 0.1), 0.0)


def _flip(b: _Builder) -> None:
    g = b.p.gravity
    push = 0.15
    airborne = b.rng.uniform(0.4, 0.7)
    t0 = b.event_start(push + airborne + 0.4)
    t_air = t0 + push
    t_land = t_air + airborne
    rotation = b.uniform(b.p.flip_rotation)
    held_pitch = b.rng.uniform(-10.0, 10.0)
    b.pitch += held_pitch + rotation * _smoothstep(b.t, t_air, t_land)
    b.roll += b.rng.uniform(-5.0, 5.0)
    toss = np.where(_window(b.t, t0, t_air), np.sin(np.pi * (b.t - t0) / push), 0.0)
    b.dynamic[:, 2] += b.rng.uniform(5.0, 10.0) * toss
    residual = b.rng.uniform(1.5, 3.5)
    for k in np.flatnonzero(_window(b.t, t_air, t_land)):
        b.override[int(k)] = np.array([0.0, 0.0, residual])
    b.impact(t_land, b.rng.uniform(1.3, 1.8) * g)


def _fall(b: _Builder) -> None:
    g = b.p.gravity
    fall = b.uniform(b.p.free_fall_duration)
    t0 = b.event_start(fall + 0.5)
    t_hit = t0 + fall
    held_pitch = b.rng.uniform(10.0, 40.0)
    held_roll = b.rng.uniform(-10.0, 10.0)
    tumble = b.rng.uniform(-30.0, 30.0)
    rest_pitch = b.rng.uniform(-5.0, 5.0)
    rest_roll = b.rng.uniform(-5.0, 5.0)
    falling = np.clip((b.t - t0) / fall, 0.0, 1.0)
    landed = _smoothstep(b.t, t_hit, t_hit + 0.2)
    airborne_pitch = held_pitch + tumble * falling
    b.pitch += airborne_pitch * (1.0 - landed) + rest_pitch * landed
    b.roll += held_roll * (1.0 - landed) + rest_roll * landed
    k_hit = b.index_at(t_hit)
    for k in np.flatnonzero(_window(b.t, t0, t_hit)):
        if k < k_hit - 1:
            b.override[int(k)] = np.zeros(3)
    peak = b.uniform(b.p.impact_peak_g) * g
    direction = (b.rng.uniform(-0.4, 0.4), b.rng.uniform(-0.4, 0.4), 1.0)
    t_hit = b.impact(t_hit, peak, direction)
    b.dynamic[:, 2] += _bounce(b.t, t_hit + 0.04, 0.15 * peak, b.rng.uniform(6.0, 10.0), 0.08)


_MODELS = {
    CaseLabel.A: _normal_touch,
    CaseLabel.B: _accidental_keep,
    CaseLabel.C: _complete_slip,
    CaseLabel.D: _tipping_point,
    CaseLabel.E: _flip,
    CaseLabel.F: _fall,
}


def generate_trace(
    case: CaseLabel,
    seed: int,
    params: MotionModelParams | None = None,
    sample_id: int = 0,
) -> SensorTrace:
    """Canonical synthetic trace for ``case``; a pure function of its arguments."""
    params = params or MotionModelParams()
    params.validate()
    b = _Builder(params, _rng(seed))
    _MODELS[case](b)
    accel, orient = b.build()
    return SensorTrace(case, sample_id, params.rate_hz, accel, orient)


def generate_dataset(
    samples_per_case: int,
    master_seed: int,
    params: MotionModelParams | None = None,
) -> list[SensorTrace]:
    """``6 * samples_per_case`` traces; trace seeds come from :func:`derive_seed`."""
    if samples_per_case < 1:
        raise InvalidParams("samples_per_case must be >= 1")
    params = params or MotionModelParams()
    params.validate()
    out = []
    for case in CaseLabel:
        for sid in range(samples_per_case):
            seed = derive_seed(master_seed, case.index, sid)
            out.append(generate_trace(case, seed, params, sample_id=sid))
    return out
