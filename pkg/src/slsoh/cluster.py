"""Trajectory-matching capacity estimator.

Each training cell is a candidate cluster. A monitored cell is assigned, at
every new aging cycle, to the training cell whose aging-charge trajectory is
closest over the whole prefix seen so far. The Ah-weighted share of past
assignments gives convex weights ``lambda_k``; the estimate is the monitored
cell's initial capacity times the weighted mix of the training cells'
normalised capacity curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyState, GridMismatch, NonPositiveQ0, OutOfRangeGrid, PrefixOutOfRange
from .features import FeatureVector
from .trajectory import Trajectory, align_to_grid


@dataclass(frozen=True, eq=False)
class TrainingCell:
    cell_id: str
    q_age: Trajectory
    q_bar: Trajectory
    q0: float
    features: tuple[FeatureVector, ...] = ()

    def __post_init__(self):
        if not self.q0 > 0:
            raise NonPositiveQ0(f"cell {self.cell_id}: q0 must be positive")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    cells: tuple[TrainingCell, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("training set needs at least one cell")

    @property
    def K(self) -> int:
        return len(self.cells)

    @property
    def cell_ids(self) -> list[str]:
        return [c.cell_id for c in self.cells]

    @property
    def span(self) -> tuple[float, float]:
        """Ah range where every training trajectory can be evaluated."""
        lo = max(max(c.q_age.ah[0], c.q_bar.ah[0]) for c in self.cells)
        hi = min(min(c.q_age.ah[-1], c.q_bar.ah[-1]) for c in self.cells)
        return float(lo), float(hi)

    def covers(self, ah: float) -> bool:
        lo, hi = self.span
        return lo <= ah <= hi

    def q_age_at(self, ah: float) -> np.ndarray:
        return np.array([c.q_age(ah) for c in self.cells])

    def q_bar_at(self, ah: float) -> np.ndarray:
        return np.array([c.q_bar(ah) for c in self.cells])

    def resampled(self, grid) -> "TrainingSet":
        """Copy with every aging-charge trajectory moved onto ``grid``."""
        return TrainingSet(
            tuple(
                TrainingCell(c.cell_id, align_to_grid(c.q_age, grid), c.q_bar, c.q0, c.features)
                for c in self.cells
            )
        )


def trajectory_distance(qx, qy, n: int) -> float:
    """Euclidean distance between the first ``n`` points of two trajectories."""
    if isinstance(qx, Trajectory) and isinstance(qy, Trajectory):
        if n <= min(len(qx), len(qy)) and not np.array_equal(qx.ah[:n], qy.ah[:n]):
            raise GridMismatch("trajectories are sampled on different Ah grids")
    x = qx.values if isinstance(qx, Trajectory) else np.asarray(qx, dtype=float)
    y = qy.values if isinstance(qy, Trajectory) else np.asarray(qy, dtype=float)
    if not 1 <= n <= min(len(x), len(y)):
        raise PrefixOutOfRange(f"prefix length {n} outside [1, {min(len(x), len(y))}]")
    total = 0.0
    for i in range(n):
        diff = float(x[i]) - float(y[i])
        total += diff * diff
    return math.sqrt(total)


def classification_index_sequence(test_q_age: Trajectory, training: TrainingSet) -> list[int]:
    """Batch classification: recompute every prefix distance from scratch.

    O(K N^2); kept as the reference the streaming update is checked against.
    """
    grid = test_q_age.ah
    trains = [align_to_grid(c.q_age, grid) for c in training.cells]
    seq = []
    for n in range(1, len(grid) + 1):
        best, s = math.inf, 0
        for k, tr in enumerate(trains, start=1):
            d = trajectory_distance(test_q_age, tr, n)
            if d < best:
                best, s = d, k
        seq.append(s)
    return seq


def lambda_from_sequence(s_seq: Sequence[int], ah: Sequence[float], K: int) -> np.ndarray:
    """Ah-weighted share of the assignments to each training cell (1-based labels)."""
    s = np.asarray(s_seq, dtype=int)
    w = np.asarray(ah, dtype=float)
    if len(s) == 0:
        raise EmptyState("no classification yet")
    if len(s) != len(w):
        raise ValueError("s_seq and ah differ in length")
    if np.any((s < 1) | (s > K)):
        raise ValueError(f"classification labels must lie in 1..{K}")
    if np.any(w < 0):
        raise ValueError("Ah values must be non-negative")
    mass = np.bincount(s - 1, weights=w, minlength=K)
    total = mass.sum()
    if total <= 0:
        # only Ah = 0 points so far: no evidence either way
        return np.full(K, 1.0 / K)
    return mass / total


@dataclass(eq=False)
class ClassificationState:
    """Streaming classification of one monitored cell. Single writer."""

    K: int
    sq_accum: np.ndarray = None
    s_seq: list[int] = field(default_factory=list)
    ah_seen: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.sq_accum is None:
            self.sq_accum = np.zeros(self.K)
        self.sq_accum = np.array(self.sq_accum, dtype=float)
        if self.sq_accum.shape != (self.K,):
            raise ValueError("sq_accum must hold one entry per training cell")
        if len(self.s_seq) != len(self.ah_seen):
            raise ValueError("s_seq and ah_seen differ in length")

    def __len__(self) -> int:
        return len(self.s_seq)

    @property
    def lam(self) -> np.ndarray:
        """Current weights; uniform before the first classification."""
        if not self.s_seq:
            return np.full(self.K, 1.0 / self.K)
        return lambda_from_sequence(self.s_seq, self.ah_seen, self.K)

    def update(self, q_age_new: float, ah_new: float, train_values: np.ndarray) -> int:
        """Fold one new aging-charge point in; returns the new 1-based index."""
        train_values = np.asarray(train_values, dtype=float)
        if train_values.shape != (self.K,):
            raise GridMismatch(f"expected {self.K} training values, got {train_values.shape}")
        if self.ah_seen and not ah_new > self.ah_seen[-1]:
            raise GridMismatch(f"Ah={ah_new!r} does not follow Ah={self.ah_seen[-1]!r}")
        diff = q_age_new - train_values
        self.sq_accum += diff * diff
        s = int(np.argmin(np.sqrt(self.sq_accum))) + 1
        self.s_seq.append(s)
        self.ah_seen.append(float(ah_new))
        return s


def classify_step(
    state: ClassificationState, training: TrainingSet, q_age_new: float, ah_new: float
) -> ClassificationState:
    """Advance ``state`` by one aging cycle (in place) and return it."""
    if state.K != training.K:
        raise GridMismatch(f"state tracks {state.K} cells, training set has {training.K}")
    state.update(q_age_new, ah_new, training.q_age_at(ah_new))
    return state


def lambda_weights(state: ClassificationState, K: Optional[int] = None) -> np.ndarray:
    K = state.K if K is None else K
    if K != state.K:
        raise ValueError(f"state tracks {state.K} cells, asked for {K}")
    return lambda_from_sequence(state.s_seq, state.ah_seen, K)


def estimate_ct(training: TrainingSet, lam, q0_z: float, ah: float) -> float:
    """Clustering estimate ``q0_z * sum_k lam_k * qbar_k(ah)``, Ah."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (training.K,):
        raise ValueError(f"expected {training.K} weights, got {lam.shape}")
    if not q0_z > 0:
        raise NonPositiveQ0(f"q0_z must be positive, got {q0_z!r}")
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to one")
    return float(q0_z * (lam @ training.q_bar_at(ah)))


def batch_estimate(test_q_age: Trajectory, training: TrainingSet, q0_z: float) -> np.ndarray:
    """Offline variant: weights from the full sequence, applied at every point."""
    s = classification_index_sequence(test_q_age, training)
    lam = lambda_from_sequence(s, test_q_age.ah, training.K)
    return np.array([estimate_ct(training, lam, q0_z, a) for a in test_q_age.ah])


def bibo_bound(training: TrainingSet, test_q_bar: Trajectory, q0_z: float, grid) -> float:
    """``q0_z * max_k ||qbar_k - qbar_z||_inf`` over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    z = test_q_bar(grid)
    worst = max(float(np.max(np.abs(c.q_bar(grid) - z))) for c in training.cells)
    return q0_z * worst


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def save_state(state: ClassificationState, path) -> None:
    lines = [
        "# classification state",
        f"K = {state.K}",
        "sq_accum = " + ",".join(repr(float(v)) for v in state.sq_accum),
        "s_seq = " + ",".join(str(v) for v in state.s_seq),
        "ah_seen = " + ",".join(repr(v) for v in state.ah_seen),
        "lambda = " + ",".join(repr(float(v)) for v in state.lam),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_state(path) -> ClassificationState:
    from .io import read_key_values

    kv = read_key_values(path)
    return ClassificationState(
        K=int(kv["K"]),
        sq_accum=np.array(_floats(kv["sq_accum"])),
        s_seq=[int(v) for v in _floats(kv.get("s_seq", ""))],
        ah_seen=_floats(kv.get("ah_seen", "")),
    )
