"""Cycle segmentation and per-cycle feature extraction.

A raw telemetry stream is cut into cycles at rests (``|I|`` below a small
threshold for a minimum dwell). Each cycle carries two markers: ``t_ch``, where
charging starts, and ``t_dis``, where charging ends (the start of the
discharge). The charge passed between them is the cycle's charge throughput;
for a C/20 capacity test it is the health label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MissingMarkers, UnsegmentableStream, WrongCycleType
from .trajectory import (
    SampleLike,
    Samples,
    as_samples,
    check_times,
    cumulative_ah,
    integrate_charge,
)

NOMINAL_CAPACITY_AH = 33.1


class CycleType(str, enum.Enum):
    AGING = "aging"
    C20_CAPACITY = "c20_capacity"
    HPPC = "hppc"
    OCV = "ocv"


@dataclass(frozen=True)
class SegmentationConfig:
    rest_current: float = 0.05  # A
    rest_dwell_s: float = 600.0
    nominal_capacity: float = NOMINAL_CAPACITY_AH
    # relative band around C/20 (and C/40) used to recognise RPT blocks
    rate_tolerance: float = 0.3
    # blocks whose current flips sign this often are pulse tests
    hppc_sign_changes: int = 3

    def __post_init__(self):
        if self.rest_current <= 0 or self.rest_dwell_s <= 0:
            raise ValueError("rest thresholds must be positive")
        if self.nominal_capacity <= 0:
            raise ValueError("nominal_capacity must be positive")
        if not 0 < self.rate_tolerance < 1 / 3:
            # wider bands would let the C/20 and C/40 windows overlap
            raise ValueError("rate_tolerance must lie in (0, 1/3)")


@dataclass(frozen=True, eq=False)
class CycleRecord:
    cell_id: str
    cycle_index: int
    cycle_type: CycleType
    samples: Samples
    t_ch: Optional[float] = None
    t_dis: Optional[float] = None
    ah_ch: float = 0.0
    ah_end: Optional[float] = None

    def __post_init__(self):
        samples = as_samples(self.samples)
        check_times(samples.t)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "cycle_type", CycleType(self.cycle_type))
        if self.cycle_index < 1:
            raise ValueError("cycle_index starts at 1")
        if (self.t_ch is None) != (self.t_dis is None):
            raise MissingMarkers("t_ch and t_dis must be given together")
        if self.t_ch is not None:
            t = samples.t
            if not (t[0] <= self.t_ch < self.t_dis <= t[-1]):
                raise MissingMarkers(
                    f"markers ({self.t_ch!r}, {self.t_dis!r}) outside "
                    f"cycle [{t[0]!r}, {t[-1]!r}] or out of order"
                )
        if self.ah_end is None:
            object.__setattr__(self, "ah_end", self.ah_ch + float(cumulative_ah(samples)[-1]))

    @property
    def duration_s(self) -> float:
        return float(self.samples.t[-1] - self.samples.t[0])

    def markers(self) -> tuple[float, float]:
        if self.t_ch is None:
            raise MissingMarkers(f"cycle {self.cycle_index} has no charge phase")
        return self.t_ch, self.t_dis


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive index ranges of consecutive True entries."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def _classify(t, i, config: SegmentationConfig) -> CycleType:
    active = np.abs(i) >= config.rest_current
    signs = np.sign(i[active])
    if np.count_nonzero(np.diff(signs)) >= config.hppc_sign_changes:
        return CycleType.HPPC
    ta = t[active]
    span = ta[-1] - ta[0]
    if span <= 0:
        return CycleType.AGING
    rate = np.trapezoid(np.abs(i), t) / span
    tol = config.rate_tolerance
    c20 = config.nominal_capacity / 20.0
    if abs(rate - c20) <= tol * c20:
        return CycleType.C20_CAPACITY
    if abs(rate - c20 / 2) <= tol * c20 / 2:
        return CycleType.OCV
    return CycleType.AGING


def _markers(t, i, rest_current) -> tuple[Optional[int], Optional[int]]:
    charging = i > rest_current
    if not np.any(charging):
        return None, None
    c = int(np.argmax(charging))
    ch = c - 1 if c > 0 and abs(i[c - 1]) < rest_current else c
    after = np.flatnonzero(~charging[c:])
    dis = c + int(after[0]) if len(after) else len(t) - 1
    if dis == ch:
        return None, None
    return ch, dis


def segment_cycles(
    samples: SampleLike,
    config: SegmentationConfig = SegmentationConfig(),
    cell_id: str = "",
) -> list[CycleRecord]:
    """Split a telemetry stream into cycles separated by rests.

    Each record spans from the last rest sample before its activity to the
    first rest sample after it, so both markers are sample times.
    """
    s = as_samples(samples)
    check_times(s.t)
    if len(s) < 2:
        raise UnsegmentableStream("stream has fewer than 2 samples")
    rest = np.abs(s.current) < config.rest_current
    seps = [
        (a, b) for a, b in _runs(rest) if s.t[b] - s.t[a] >= config.rest_dwell_s
    ]
    if not seps:
        raise UnsegmentableStream(
            f"no rest of at least {config.rest_dwell_s:g} s below "
            f"{config.rest_current:g} A"
        )
    bounds = []
    if seps[0][0] > 0:
        bounds.append((0, seps[0][0]))
    bounds += [(prev[1], nxt[0]) for prev, nxt in zip(seps, seps[1:])]
    if seps[-1][1] < len(s) - 1:
        bounds.append((seps[-1][1], len(s) - 1))

    ah = cumulative_ah(s)
    records = []
    for a, b in bounds:
        if np.all(rest[a : b + 1]) or b - a < 1:
            continue
        t, i = s.t[a : b + 1], s.current[a : b + 1]
        kind = _classify(t, i, config)
        ch, dis = _markers(t, i, config.rest_current)
        records.append(
            CycleRecord(
                cell_id=cell_id,
                cycle_index=len(records) + 1,
                cycle_type=kind,
                samples=s[a : b + 1],
                t_ch=None if ch is None else float(t[ch]),
                t_dis=None if dis is None else float(t[dis]),
                ah_ch=float(ah[a + (ch if ch is not None else 0)]),
                ah_end=float(ah[b]),
            )
        )
    return records


def _require(cycle: CycleRecord, kind: CycleType) -> None:
    if cycle.cycle_type is not kind:
        raise WrongCycleType(
            f"cycle {cycle.cycle_index} is {cycle.cycle_type.value}, expected {kind.value}"
        )


def cycle_q_age(cycle: CycleRecord) -> float:
    """Charge throughput of an aging cycle, Ah."""
    _require(cycle, CycleType.AGING)
    return integrate_charge(cycle.samples, *cycle.markers())


def cycle_q_c20(cycle: CycleRecord) -> float:
    """C/20 charge capacity measured by a capacity-test cycle, Ah."""
    _require(cycle, CycleType.C20_CAPACITY)
    return integrate_charge(cycle.samples, *cycle.markers())


def _time_mean(t: np.ndarray, y: np.ndarray) -> float:
    span = t[-1] - t[0]
    if span <= 0:
        return float(y[0])
    return float(np.trapezoid(y, t) / span)


def mean_charge_voltage(cycle: CycleRecord) -> float:
    t0, t1 = cycle.markers()
    s = cycle.samples
    lo, hi = np.searchsorted(s.t, [t0, t1])
    return _time_mean(s.t[lo : hi + 1], s.voltage[lo : hi + 1])


def mean_temperature(cycle: CycleRecord) -> float:
    return _time_mean(cycle.samples.t, cycle.samples.temperature)


@dataclass(frozen=True)
class Feature:
    name: str
    compute: Callable[[CycleRecord], float]


DEFAULT_SCHEMA: tuple[Feature, ...] = (
    Feature("q_age", cycle_q_age),
    Feature("mean_v_charge", mean_charge_voltage),
    Feature("mean_t", mean_temperature),
    Feature("duration_s", lambda c: c.duration_s),
    Feature("ah_end", lambda c: float(c.ah_end)),
)


def feature_names(schema: Sequence[Feature] = DEFAULT_SCHEMA) -> tuple[str, ...]:
    base = tuple(f.name for f in schema)
    return base + tuple("prev_" + n for n in base)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    ah: float
    entries: np.ndarray
    names: tuple[str, ...] = field(default_factory=feature_names)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.shape != (len(self.names),):
            raise ValueError(f"{entries.shape} entries for {len(self.names)} names")
        if not np.all(np.isfinite(entries)):
            raise ValueError("feature entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)


def cycle_features(cycle: CycleRecord, schema: Sequence[Feature] = DEFAULT_SCHEMA) -> np.ndarray:
    _require(cycle, CycleType.AGING)
    return np.array([f.compute(cycle) for f in schema], dtype=float)


def build_feature_vector(
    cycle_n: CycleRecord,
    cycle_prev: Optional[CycleRecord] = None,
    schema: Sequence[Feature] = DEFAULT_SCHEMA,
) -> FeatureVector:
    """Features of an aging cycle followed by those of its predecessor (zeros if none).

    ``ah`` is the throughput at the start of the cycle's charge, the abscissa
    shared with the aging-charge trajectory.
    """
    current = cycle_features(cycle_n, schema)
    prev = np.zeros(len(schema)) if cycle_prev is None else cycle_features(cycle_prev, schema)
    return FeatureVector(
        ah=cycle_n.ah_ch,
        entries=np.concatenate((current, prev)),
        names=feature_names(schema),
    )
