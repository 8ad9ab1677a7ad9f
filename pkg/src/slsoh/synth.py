"""Seeded synthetic second-life fleets.

Every cell gets a capacity curve that first rises and then falls with Ah
throughput (a seasonal hump on top of a slow linear fade):

    Q(Ah) = q0 * (1 + hump * h(Ah) - fade * Ah),   h = sin^2(pi * min(Ah / Ah_life, 1))

Cells are split into groups. A group shares its hump and fade factors, so the
normalised curves of group mates coincide, and its aging-cycle charge is shifted
by a group offset. Raw telemetry is laid out as piecewise-linear current
profiles sampled at their breakpoints, which makes trapezoidal coulomb
counting exact: segmentation and feature extraction recover the generator's
intended values up to rounding.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .features import NOMINAL_CAPACITY_AH
from .trajectory import SECONDS_PER_HOUR, Samples, Trajectory

RAMP_S = 60.0
REST_S = 1200.0
AGING_C_RATE = 1.0 / 3.0
AGING_DT_S = 1800.0
C20_DT_S = 3600.0
V_REST = 3.0
V_TOP = 4.0


@dataclass(frozen=True)
class FleetSpec:
    seed: int = 0
    n_cells: int = 8
    n_groups: int = 2
    cycles_per_cell: int = 200
    q0_range: tuple[float, float] = (30.0, 34.0)
    hump_amplitude: float = 0.06
    fade_rate: float = 4e-6  # 1/Ah
    noise_sigma: float = 0.02  # Ah
    group_separation: float = 0.1  # Ah
    rpt_every: int = 10
    aging_depth: float = 0.8
    nominal_capacity: float = NOMINAL_CAPACITY_AH
    include_hppc: bool = True

    def validate(self) -> None:
        lo, hi = self.q0_range
        problems = []
        if self.n_cells < 2:
            problems.append("n_cells must be >= 2")
        if not 1 <= self.n_groups <= self.n_cells:
            problems.append("n_groups must lie in [1, n_cells]")
        if self.cycles_per_cell < 1:
            problems.append("cycles_per_cell must be >= 1")
        if self.rpt_every < 1:
            problems.append("rpt_every must be >= 1")
        if not 0 < lo <= hi:
            problems.append("q0_range must satisfy 0 < low <= high")
        if self.noise_sigma < 0 or not np.isfinite(self.noise_sigma):
            problems.append("noise_sigma must be finite and >= 0")
        if self.group_separation < 0:
            problems.append("group_separation must be >= 0")
        if self.hump_amplitude < 0 or self.fade_rate < 0:
            problems.append("hump_amplitude and fade_rate must be >= 0")
        if not 0 < self.aging_depth <= 1:
            problems.append("aging_depth must lie in (0, 1]")
        if self.nominal_capacity <= 0:
            problems.append("nominal_capacity must be > 0")
        if problems:
            raise InvalidSpec("; ".join(problems))

    @property
    def ah_life(self) -> float:
        """Throughput scale of the hump: peak near mid-life."""
        mid = 0.5 * sum(self.q0_range)
        rpts = self.cycles_per_cell // self.rpt_every + 1
        return 2.0 * (self.cycles_per_cell * self.aging_depth + rpts) * mid


def _group_factors(spec: FleetSpec, g: int) -> tuple[float, float]:
    frac = g / (spec.n_groups - 1) if spec.n_groups > 1 else 0.0
    return spec.hump_amplitude * (1.0 + 0.6 * frac), spec.fade_rate * (1.0 + frac)


def _hump(ah, ah_life):
    u = np.minimum(np.asarray(ah, dtype=float) / ah_life, 1.0)
    return np.sin(np.pi * u) ** 2


@dataclass(frozen=True, eq=False)
class SyntheticCell:
    cell_id: str
    group: int
    q0: float
    hump: float
    fade: float
    offset: float
    spec: FleetSpec = field(repr=False)
    samples: Samples = field(default=None, repr=False)
    aging_ah: np.ndarray = field(default=None, repr=False)
    q_age: np.ndarray = field(default=None, repr=False)
    rpt_ah: np.ndarray = field(default=None, repr=False)
    q_c20: np.ndarray = field(default=None, repr=False)

    def capacity(self, ah):
        """Noise-free C/20 charge capacity at throughput ``ah``."""
        ah = np.asarray(ah, dtype=float)
        return self.q0 * (1.0 + self.hump * _hump(ah, self.spec.ah_life) - self.fade * ah)

    def q_age_true(self, ah):
        return self.spec.aging_depth * self.capacity(ah) + self.offset

    @property
    def q_true(self) -> np.ndarray:
        return self.capacity(self.rpt_ah)

    def q_age_trajectory(self) -> Trajectory:
        return Trajectory(self.aging_ah, self.q_age)

    def capacity_trajectory(self) -> Trajectory:
        return Trajectory(self.rpt_ah, self.q_c20)


class _StreamBuilder:
    """Appends piecewise-linear current blocks; the last sample is always at rest."""

    def __init__(self, temperature: float):
        self.t = [0.0]
        self.i = [0.0]
        self.v = [V_REST]
        self.temp = [temperature]
        self.ah = 0.0

    def _add(self, dt, current, voltage, temperature):
        self.t.append(self.t[-1] + dt)
        self.i.append(current)
        self.v.append(voltage)
        self.temp.append(temperature)

    def _phase(self, charge_ah, current, v0, v1, dt_sample, temperature):
        """Ramp up, hold, ramp down to zero; passes exactly ``charge_ah``."""
        duration = abs(charge_ah) * SECONDS_PER_HOUR / abs(current)  # ramps + plateau
        plateau = duration - RAMP_S
        if plateau <= 0:
            raise InvalidSpec(f"phase of {charge_ah!r} Ah too short for the current ramp")
        total = plateau + 2 * RAMP_S
        start = self.t[-1]

        def volt(tt):
            return v0 + (v1 - v0) * (tt - start) / total

        for tt in start + RAMP_S + np.arange(0.0, plateau, dt_sample):
            self._add(tt - self.t[-1], current, volt(tt), temperature)
        end_plateau = start + RAMP_S + plateau
        self._add(end_plateau - self.t[-1], current, volt(end_plateau), temperature)
        self._add(RAMP_S, 0.0, v1, temperature)

    def block(self, q_charge, i_charge, v_charge_top, q_dis, i_dis, dt_sample, temperature):
        t0 = len(self.t) - 1
        self._phase(q_charge, i_charge, V_REST, v_charge_top, dt_sample, temperature)
        self._phase(q_dis, -i_dis, v_charge_top, V_REST, dt_sample, temperature)
        self._rest(REST_S, temperature)
        return self._throughput_since(t0)

    def pulses(self, nominal, temperature, repeats=3):
        t0 = len(self.t) - 1
        for _ in range(repeats):
            for current, hold in ((-nominal, 10.0), (0.75 * nominal, 10.0)):
                self._add(1.0, current, V_REST, temperature)
                self._add(hold, current, V_REST, temperature)
                self._add(1.0, 0.0, V_REST, temperature)
                self._add(40.0, 0.0, V_REST, temperature)
        self._rest(REST_S, temperature)
        return self._throughput_since(t0)

    def _rest(self, seconds, temperature):
        self._add(seconds, 0.0, V_REST, temperature)

    def _throughput_since(self, k0):
        t = np.asarray(self.t[k0:])
        a = np.abs(np.asarray(self.i[k0:]))
        got = float(np.sum(0.5 * (a[1:] + a[:-1]) * np.diff(t)) / SECONDS_PER_HOUR)
        self.ah += got
        return got

    def samples(self) -> Samples:
        return Samples(self.t, self.i, self.v, self.temp)


def _group_offsets(spec: FleetSpec, q0s, groups) -> np.ndarray:
    """Cumulative Q_age shifts so different groups never come closer than the separation."""
    grid = np.linspace(0.0, 3.0 * spec.ah_life, 2001)
    offsets = np.zeros(spec.n_groups)
    for g in range(1, spec.n_groups):
        lower = [
            q0 * (1 + _group_factors(spec, g - 1)[0] * _hump(grid, spec.ah_life)
                  - _group_factors(spec, g - 1)[1] * grid)
            for q0, gg in zip(q0s, groups) if gg == g - 1
        ]
        upper = [
            q0 * (1 + _group_factors(spec, g)[0] * _hump(grid, spec.ah_life)
                  - _group_factors(spec, g)[1] * grid)
            for q0, gg in zip(q0s, groups) if gg == g
        ]
        overlap = np.max(np.max(lower, axis=0) - np.min(upper, axis=0))
        offsets[g] = offsets[g - 1] + spec.group_separation + spec.aging_depth * max(overlap, 0.0)
    return offsets


def generate(spec: FleetSpec = FleetSpec()) -> "SyntheticFleet":
    """Build a fleet; the same spec always yields bit-identical telemetry."""
    spec.validate()
    lo, hi = spec.q0_range
    G = spec.n_groups
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(spec.n_cells)]
    groups = [i % G for i in range(spec.n_cells)]
    width = (hi - lo) / G
    q0s = [lo + (g + 0.5) * width + rng.uniform(-0.3, 0.3) * width for g, rng in zip(groups, rngs)]
    offsets = _group_offsets(spec, q0s, groups)

    cells = []
    for i, (g, q0, rng) in enumerate(zip(groups, q0s, rngs)):
        hump, fade = _group_factors(spec, g)
        cell = SyntheticCell(
            cell_id=f"cell_{i + 1:02d}", group=g, q0=q0, hump=hump, fade=fade,
            offset=float(offsets[g]), spec=spec,
        )
        cells.append(_synthesize(cell, rng))
    return SyntheticFleet(spec, cells)


def _synthesize(cell: SyntheticCell, rng: np.random.Generator) -> SyntheticCell:
    spec = cell.spec
    sigma = spec.noise_sigma
    t_offset = rng.normal(0.0, 0.5)
    v_offset = rng.normal(0.0, 0.005)
    c20 = spec.nominal_capacity / 20.0
    i_age = spec.nominal_capacity * AGING_C_RATE

    def temperature(ah):
        return float(25.0 + 8.0 * _hump(ah, spec.ah_life) + t_offset)

    def v_top(ah):
        q_bar = float(cell.capacity(ah)) / cell.q0
        return V_TOP - 0.3 + 0.5 * (q_bar - 1.0) + v_offset

    b = _StreamBuilder(temperature(0.0))
    aging_ah, q_age, rpt_ah, q_c20 = [], [], [], []

    def rpt():
        ah = b.ah
        q = float(cell.capacity(ah)) + (rng.normal(0.0, sigma) if sigma else 0.0)
        rpt_ah.append(ah)
        q_c20.append(q)
        b.block(q, c20, V_TOP, q, c20, C20_DT_S, temperature(ah))
        if spec.include_hppc:
            b.pulses(spec.nominal_capacity, temperature(b.ah))

    rpt()
    for n in range(1, spec.cycles_per_cell + 1):
        ah = b.ah
        q = float(cell.q_age_true(ah)) + (rng.normal(0.0, sigma) if sigma else 0.0)
        aging_ah.append(ah)
        q_age.append(q)
        b.block(q, i_age, v_top(ah), q, i_age, AGING_DT_S, temperature(ah))
        if n % spec.rpt_every == 0 or n == spec.cycles_per_cell:
            rpt()

    if min(q_age) <= 0 or min(q_c20) <= 0:
        raise InvalidSpec(f"{cell.cell_id}: spec produces non-positive capacities")
    return SyntheticCell(
        **{k: getattr(cell, k) for k in ("cell_id", "group", "q0", "hump", "fade", "offset", "spec")},
        samples=b.samples(),
        aging_ah=np.array(aging_ah),
        q_age=np.array(q_age),
        rpt_ah=np.array(rpt_ah),
        q_c20=np.array(q_c20),
    )


@dataclass(frozen=True, eq=False)
class SyntheticFleet:
    spec: FleetSpec
    cells: list[SyntheticCell]

    def __len__(self) -> int:
        return len(self.cells)

    def __getitem__(self, cell_id: str) -> SyntheticCell:
        for c in self.cells:
            if c.cell_id == cell_id:
                return c
        raise KeyError(cell_id)

    @property
    def cell_ids(self) -> list[str]:
        return [c.cell_id for c in self.cells]

    def streams(self) -> dict[str, Samples]:
        return {c.cell_id: c.samples for c in self.cells}

    def groups(self) -> dict[str, int]:
        return {c.cell_id: c.group for c in self.cells}

    def write(self, out_dir) -> list[Path]:
        """Telemetry CSV per cell plus ``ground_truth.csv``; returns the paths written."""
        from .io import write_telemetry

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [write_telemetry(c.samples, out / f"{c.cell_id}.csv", c.cell_id) for c in self.cells]
        paths.append(write_ground_truth(self, out / "ground_truth.csv"))
        return paths


def write_ground_truth(fleet: SyntheticFleet, path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell_id", "ah", "q_true", "group_label"])
        for c in fleet.cells:
            for ah, q in zip(c.rpt_ah, c.q_true):
                w.writerow([c.cell_id, repr(float(ah)), repr(float(q)), c.group + 1])
    return Path(path)
