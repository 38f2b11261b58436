"""Sensor-trace parsing, serialization and regularization.

Trace files are UTF-8 CSV with the header ``t,ax,ay,az,azimuth,pitch,roll``:
time in seconds, acceleration in m/s^2, orientation angles in degrees.
Files in a dataset directory are named ``<case letter>_<sample_id>.csv``.
"""

from __future__ import annotations

import enum
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import InvalidArgument, IoFailure, MalformedRow, NonMonotonicTime, TooShort

HEADER = ("t", "ax", "ay", "az", "azimuth", "pitch", "roll")
CANONICAL_RATE_HZ = 50.0
CANONICAL_LENGTH = 256

# (lower bound, period) of each orientation channel's canonical range
ANGLE_RANGES = ((0.0, 360.0), (-180.0, 360.0), (-90.0, 180.0))

_FILENAME_RE = re.compile(r"^([A-Z])_(\d+)\.csv$")


class CaseLabel(enum.Enum):
    A = "NormalTouchKeep"
    B = "AccidentalKeep"
    C = "CompleteSlip"
    D = "SlipTillTippingPoint"
    E = "Flip"
    F = "Fall"

    @property
    def index(self) -> int:
        return _CASE_ORDER.index(self)

    def __lt__(self, other: "CaseLabel") -> bool:
        if not isinstance(other, CaseLabel):
            return NotImplemented
        return self.index < other.index

    @classmethod
    def from_letter(cls, letter: str) -> "CaseLabel":
        try:
            return cls[letter]
        except KeyError:
            raise InvalidArgument(f"unknown case letter {letter!r}") from None


_CASE_ORDER = list(CaseLabel)


@dataclass(eq=False)
class SensorTrace:
    """One recorded sample: 3-axis acceleration plus azimuth/pitch/roll.

    ``timestamps`` is set only for raw traces straight out of :func:`parse_trace`;
    canonical traces leave it ``None`` and sample ``k`` sits at ``k / sample_rate_hz``.
    """

    case: CaseLabel
    sample_id: int
    sample_rate_hz: float
    accel: np.ndarray
    orient: np.ndarray
    timestamps: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        self.accel = np.asarray(self.accel, dtype=float).reshape(-1, 3)
        self.orient = np.asarray(self.orient, dtype=float).reshape(-1, 3)
        if len(self.accel) != len(self.orient):
            raise InvalidArgument("accel and orient must have equal length")
        if self.sample_rate_hz <= 0:
            raise InvalidArgument("sample_rate_hz must be positive")
        if self.sample_id < 0:
            raise InvalidArgument("sample_id must be non-negative")

    def __len__(self) -> int:
        return len(self.accel)

    @property
    def is_canonical(self) -> bool:
        return self.timestamps is None

    def times(self) -> np.ndarray:
        if self.timestamps is not None:
            return self.timestamps
        return np.arange(len(self)) / self.sample_rate_hz

    def equals(self, other: "SensorTrace") -> bool:
        return (
            self.case == other.case
            and self.sample_id == other.sample_id
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.accel, other.accel)
            and np.array_equal(self.orient, other.orient)
        )


def wrap_angles(orient: np.ndarray) -> np.ndarray:
    """Wrap angle columns into their canonical ranges; in-range values are untouched."""
    out = np.array(orient, dtype=float, copy=True)
    for col, (lo, period) in enumerate(ANGLE_RANGES):
        x = out[:, col]
        hi_ok = x < lo + period if col == 0 else x <= lo + period
        inside = (x >= lo) & hi_ok
        out[:, col] = np.where(inside, x, np.mod(x - lo, period) + lo)
    return out


def _parse_float(text: str, line: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line, f"cannot parse {name}={text!r} as a number") from None
    if not math.isfinite(value):
        raise MalformedRow(line, f"non-finite {name}")
    return value


def parse_trace(source: TextIO | str, case: CaseLabel, sample_id: int) -> SensorTrace:
    """Parse a trace CSV into a raw trace that keeps its original timestamps."""
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = source.read().split("\n")
    if not lines or lines[0].strip().lstrip("﻿") != ",".join(HEADER):
        raise MalformedRow(1, f"expected header {','.join(HEADER)!r}")
    rows = []
    last_t = -math.inf
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cols = raw.strip().split(",")
        if len(cols) != len(HEADER):
            raise MalformedRow(lineno, f"expected {len(HEADER)} columns, got {len(cols)}")
        values = [_parse_float(c, lineno, name) for c, name in zip(cols, HEADER)]
        if values[0] <= last_t:
            raise NonMonotonicTime(lineno)
        last_t = values[0]
        rows.append(values)
    if len(rows) < 2:
        raise TooShort(f"trace has {len(rows)} data rows, need at least 2")
    data = np.array(rows)
    t = data[:, 0]
    nominal_rate = (len(t) - 1) / (t[-1] - t[0])
    return SensorTrace(
        case=case,
        sample_id=sample_id,
        sample_rate_hz=nominal_rate,
        accel=data[:, 1:4],
        orient=wrap_angles(data[:, 4:7]),
        timestamps=t,
    )


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def serialize_trace(trace: SensorTrace) -> str:
    t = trace.times()
    out = [",".join(HEADER)]
    for k in range(len(trace)):
        vals = (t[k], *trace.accel[k], *trace.orient[k])
        out.append(",".join(_fmt(v) for v in vals))
    return "\n".join(out) + "\n"


def _interp_exact(t_src: np.ndarray, y: np.ndarray, t_new: np.ndarray, period: float | None) -> np.ndarray:
    # left node plus fraction of the step; exact whenever a query hits a node
    if period is None:
        y_step = np.diff(y)
    else:
        y_step = np.diff(np.unwrap(y, period=period))
    idx = np.searchsorted(t_src, t_new, side="right") - 1
    idx = np.clip(idx, 0, len(t_src) - 2)
    frac = (t_new - t_src[idx]) / (t_src[idx + 1] - t_src[idx])
    out = np.where(frac == 0.0, y[idx], y[idx] + frac * y_step[idx])
    return np.where(frac == 1.0, y[idx + 1], out)


def resample_window(
    trace: SensorTrace,
    rate_hz: float = CANONICAL_RATE_HZ,
    length: int = CANONICAL_LENGTH,
) -> SensorTrace:
    """Linearly interpolate onto a uniform grid and fix the sample count.

    Excess samples are cut from the end; short traces are padded by holding the
    last value. Angles are interpolated unwrapped and wrapped back afterwards.
    """
    if rate_hz <= 0 or not math.isfinite(rate_hz):
        raise InvalidArgument("rate_hz must be a positive real")
    if length < 2:
        raise InvalidArgument("length must be at least 2")
    t = trace.times()
    if len(t) < 2 or t[-1] - t[0] <= 0:
        raise InvalidArgument("trace duration must be positive")
    rel = t - t[0]
    grid = np.arange(length) / rate_hz
    inside = grid <= rel[-1]
    t_q = grid[inside]

    accel = np.empty((length, 3))
    orient = np.empty((length, 3))
    for c in range(3):
        accel[inside, c] = _interp_exact(rel, trace.accel[:, c], t_q, None)
        orient[inside, c] = _interp_exact(rel, trace.orient[:, c], t_q, ANGLE_RANGES[c][1])
    n_in = int(inside.sum())
    accel[n_in:] = accel[n_in - 1]
    orient[n_in:] = orient[n_in - 1]
    return SensorTrace(
        case=trace.case,
        sample_id=trace.sample_id,
        sample_rate_hz=float(rate_hz),
        accel=accel,
        orient=wrap_angles(orient),
    )


def trace_filename(case: CaseLabel, sample_id: int) -> str:
    return f"{case.name}_{sample_id}.csv"


def parse_filename(name: str) -> tuple[CaseLabel, int] | None:
    m = _FILENAME_RE.match(name)
    if m is None or m.group(1) not in CaseLabel.__members__:
        return None
    return CaseLabel[m.group(1)], int(m.group(2))


def list_trace_files(directory: Path) -> list[tuple[CaseLabel, int, Path]]:
    directory = Path(directory)
    if not directory.is_dir():
        raise IoFailure(f"not a directory: {directory}")
    found = []
    for p in directory.iterdir():
        key = parse_filename(p.name)
        if key is not None and p.is_file():
            found.append((key[0], key[1], p))
    found.sort(key=lambda item: (item[0].index, item[1]))
    return found


def read_trace_file(path: Path, case: CaseLabel, sample_id: int) -> SensorTrace:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_trace(fh, case, sample_id)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def load_directory(
    directory: Path,
    rate_hz: float = CANONICAL_RATE_HZ,
    length: int = CANONICAL_LENGTH,
) -> list[SensorTrace]:
    """Read and regularize every ``<case>_<id>.csv`` in ``directory``."""
    return [
        resample_window(read_trace_file(p, case, sid), rate_hz, length)
        for case, sid, p in list_trace_files(directory)
    ]


def sort_traces(traces: Iterable[SensorTrace]) -> list[SensorTrace]:
    return sorted(traces, key=lambda tr: (tr.case.index, tr.sample_id))
