"""Sampled telemetry, Ah-indexed trajectories and coulomb counting.

Currents follow the cycler convention: positive while charging, negative
while discharging. Times are in seconds, charge in ampere-hours.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import (
    EmptyWindow,
    InvalidTrajectory,
    NonMonotonicTime,
    NonPositiveQ0,
    OutOfRangeGrid,
)

SECONDS_PER_HOUR = 3600.0


class TimeSample(NamedTuple):
    t: float
    current: float
    voltage: float
    temperature: float


class Samples:
    """Column-oriented, read-only block of :class:`TimeSample` rows.

    Slicing returns another ``Samples`` viewing the same buffers.
    """

    __slots__ = ("t", "current", "voltage", "temperature")

    def __init__(self, t, current, voltage=None, temperature=None, *, check=True):
        t = np.asarray(t, dtype=float)
        current = np.asarray(current, dtype=float)
        voltage = np.zeros_like(t) if voltage is None else np.asarray(voltage, dtype=float)
        temperature = (
            np.zeros_like(t) if temperature is None else np.asarray(temperature, dtype=float)
        )
        if not (t.ndim == current.ndim == voltage.ndim == temperature.ndim == 1):
            raise ValueError("sample columns must be one-dimensional")
        if not (len(t) == len(current) == len(voltage) == len(temperature)):
            raise ValueError("sample columns differ in length")
        if check:
            check_times(t)
        for arr in (t, current, voltage, temperature):
            arr.setflags(write=False)
        self.t = t
        self.current = current
        self.voltage = voltage
        self.temperature = temperature

    @classmethod
    def from_rows(cls, rows: Sequence[TimeSample]) -> "Samples":
        if len(rows) == 0:
            return cls(np.empty(0), np.empty(0))
        arr = np.asarray(rows, dtype=float).reshape(len(rows), 4)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy())

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return Samples(
                self.t[key], self.current[key], self.voltage[key], self.temperature[key],
                check=False,
            )
        return TimeSample(
            float(self.t[key]), float(self.current[key]),
            float(self.voltage[key]), float(self.temperature[key]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Samples):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in zip(
                (self.t, self.current, self.voltage, self.temperature),
                (other.t, other.current, other.voltage, other.temperature),
            )
        )

    def __repr__(self) -> str:
        if len(self) == 0:
            return "Samples(n=0)"
        return f"Samples(n={len(self)}, t=[{self.t[0]:g} .. {self.t[-1]:g}] s)"


SampleLike = Union[Samples, Sequence[TimeSample]]


def as_samples(samples: SampleLike) -> Samples:
    if isinstance(samples, Samples):
        return samples
    return Samples.from_rows(list(samples))


def check_times(t: np.ndarray) -> None:
    if not np.all(np.isfinite(t)):
        raise NonMonotonicTime("sample times must be finite")
    if len(t) and t[0] < 0:
        raise NonMonotonicTime("sample times must be non-negative")
    if len(t) > 1:
        bad = np.flatnonzero(np.diff(t) <= 0)
        if len(bad):
            i = int(bad[0]) + 1
            raise NonMonotonicTime(
                f"sample {i} at t={t[i]!r} s does not follow t={t[i - 1]!r} s"
            )


def as_ah_sequence(values) -> np.ndarray:
    """Validate an accumulated-throughput sequence (finite, >= 0, strictly increasing)."""
    ah = np.asarray(values, dtype=float)
    if ah.ndim != 1 or len(ah) == 0:
        raise InvalidTrajectory("Ah sequence must be a non-empty 1-D array")
    if not np.all(np.isfinite(ah)):
        raise InvalidTrajectory("Ah sequence contains non-finite values")
    if ah[0] < 0:
        raise InvalidTrajectory("Ah sequence contains negative throughput")
    if len(ah) > 1 and np.any(np.diff(ah) <= 0):
        raise InvalidTrajectory("Ah sequence is not strictly increasing")
    return ah


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A value sampled along accumulated Ah throughput."""

    ah: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ah = as_ah_sequence(self.ah).copy()
        values = np.array(self.values, dtype=float)
        if values.shape != ah.shape:
            raise InvalidTrajectory(
                f"{len(values)} values for {len(ah)} Ah points"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidTrajectory("trajectory values must be finite")
        ah.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "ah", ah)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.ah)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.ah[0]), float(self.ah[-1])

    def __call__(self, ah):
        """Linear interpolation inside the span; raises outside it."""
        grid = np.atleast_1d(np.asarray(ah, dtype=float))
        out = _interp_checked(self, grid)
        return out if np.ndim(ah) else float(out[0])


def _window(s: Samples, t_start: float, t_end: float) -> tuple[np.ndarray, np.ndarray]:
    """Samples inside [t_start, t_end] with linearly interpolated end points."""
    t, i = s.t, s.current
    lo = np.searchsorted(t, t_start, side="left")
    hi = np.searchsorted(t, t_end, side="right")
    if hi - lo < 2:
        raise EmptyWindow(
            f"{hi - lo} sample(s) in [{t_start!r}, {t_end!r}] s; need at least 2"
        )
    tw, iw = t[lo:hi], i[lo:hi]
    if tw[0] > t_start:
        tw = np.concatenate(([t_start], tw))
        iw = np.concatenate(([np.interp(t_start, t, i)], iw))
    if tw[-1] < t_end:
        tw = np.concatenate((tw, [t_end]))
        iw = np.concatenate((iw, [np.interp(t_end, t, i)]))
    return tw, iw


def _check_window(s: Samples, t_start: float, t_end: float) -> None:
    if len(s) < 2:
        raise EmptyWindow("need at least 2 samples")
    if not t_start < t_end:
        raise EmptyWindow(f"empty window [{t_start!r}, {t_end!r}] s")
    if t_start < s.t[0] or t_end > s.t[-1]:
        raise EmptyWindow(
            f"window [{t_start!r}, {t_end!r}] s leaves sample range "
            f"[{s.t[0]!r}, {s.t[-1]!r}] s"
        )


def integrate_charge(samples: SampleLike, t_start: float, t_end: float) -> float:
    """Signed charge passed between ``t_start`` and ``t_end``, in Ah (trapezoidal rule)."""
    s = as_samples(samples)
    check_times(s.t)
    _check_window(s, t_start, t_end)
    tw, iw = _window(s, t_start, t_end)
    return float(np.trapezoid(iw, tw) / SECONDS_PER_HOUR)


def accumulate_ah(samples: SampleLike, t_end: float) -> float:
    """Ah throughput, the integral of ``|I|`` from the first sample up to ``t_end``."""
    s = as_samples(samples)
    check_times(s.t)
    if len(s) == 0:
        raise EmptyWindow("no samples")
    if t_end < s.t[0] or t_end > s.t[-1]:
        raise EmptyWindow(f"t_end={t_end!r} s outside [{s.t[0]!r}, {s.t[-1]!r}] s")
    if t_end == s.t[0]:
        return 0.0
    hi = np.searchsorted(s.t, t_end, side="right")
    a = np.abs(s.current[:hi])
    t = s.t[:hi]
    if t[-1] < t_end:
        t = np.concatenate((t, [t_end]))
        a = np.concatenate((a, [abs(np.interp(t_end, s.t, s.current))]))
    return float(np.trapezoid(a, t) / SECONDS_PER_HOUR)


def cumulative_ah(samples: SampleLike) -> np.ndarray:
    """Ah throughput at every sample time; zero at the first sample."""
    s = as_samples(samples)
    if len(s) == 0:
        return np.empty(0)
    a = np.abs(s.current)
    seg = 0.5 * (a[1:] + a[:-1]) * np.diff(s.t)
    return np.concatenate(([0.0], np.cumsum(seg))) / SECONDS_PER_HOUR


def normalize_capacity(traj: Trajectory, q0: float) -> Trajectory:
    if not q0 > 0:
        raise NonPositiveQ0(f"q0 must be positive, got {q0!r}")
    return Trajectory(traj.ah, traj.values / q0)


def _interp_checked(traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    lo, hi = traj.ah[0], traj.ah[-1]
    outside = (grid < lo) | (grid > hi) | ~np.isfinite(grid)
    if np.any(outside):
        bad = grid[outside][0]
        raise OutOfRangeGrid(f"Ah={bad!r} outside trajectory span [{lo!r}, {hi!r}]")
    return np.interp(grid, traj.ah, traj.values)


def align_to_grid(traj: Trajectory, grid) -> Trajectory:
    """Resample ``traj`` onto ``grid`` by linear interpolation, without extrapolating."""
    grid = as_ah_sequence(grid)
    return Trajectory(grid, _interp_checked(traj, grid))
