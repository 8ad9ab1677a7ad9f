"""Online fusion of the regression and clustering estimators.

The clustering weight ramps linearly with Ah throughput, ``w2 = learn_alpha *
ah``, and is capped at one half; the regression keeps the rest. Early in life
the offline regression dominates; as throughput accumulates the trajectory
match takes over half of the estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import enr
from .cluster import ClassificationState, TrainingSet, classify_step, estimate_ct
from .errors import InvalidWeights, NonPositiveQ0, StaleCycle, WrongCycleType
from .features import (
    DEFAULT_SCHEMA,
    CycleRecord,
    CycleType,
    Feature,
    build_feature_vector,
    cycle_q_age,
)

W2_CAP = 0.5


@dataclass(frozen=True)
class FusionConfig:
    learn_alpha: Optional[float] = None  # 1/Ah
    ah_max: Optional[float] = None  # Ah

    def __post_init__(self):
        if self.learn_alpha is None and self.ah_max is None:
            raise ValueError("give learn_alpha or ah_max")
        if self.learn_alpha is not None and not self.learn_alpha >= 0:
            raise ValueError(f"learn_alpha must be >= 0, got {self.learn_alpha!r}")
        if self.ah_max is not None and not self.ah_max > 0:
            raise ValueError(f"ah_max must be > 0, got {self.ah_max!r}")

    @property
    def alpha(self) -> float:
        if self.learn_alpha is not None:
            return float(self.learn_alpha)
        return 1.0 / (20.0 * self.ah_max)


def weights(config: FusionConfig, ah: float) -> tuple[float, float]:
    if not ah >= 0:
        raise ValueError(f"Ah must be >= 0, got {ah!r}")
    w2 = min(config.alpha * ah, W2_CAP)
    return 1.0 - w2, w2


def fuse(q_rg: float, q_ct: float, w: tuple[float, float]) -> float:
    w1, w2 = w
    if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-12:
        raise InvalidWeights(f"weights {w!r} are not a convex pair")
    return w1 * q_rg + w2 * q_ct


@dataclass(frozen=True)
class FusionEstimate:
    ah: float
    q_rg: float
    q_ct: float
    w1: float
    w2: float
    q_hat: float
    s_n: int
    lam: tuple[float, ...]
    bibo_margin: float = math.nan
    cycle_index: int = 0


@dataclass(eq=False)
class Session:
    """One monitored cell: offline model, training set, classification state and log.

    ``truth`` is optional and only feeds the ``bibo_margin`` diagnostic.
    """

    model: enr.EnrModel
    training: TrainingSet
    config: FusionConfig
    q0_z: float
    schema: Sequence[Feature] = DEFAULT_SCHEMA
    truth: Optional[Callable[[float], float]] = None
    state: ClassificationState = None
    log: list[FusionEstimate] = field(default_factory=list)
    prev_cycle: Optional[CycleRecord] = None

    def __post_init__(self):
        if not self.q0_z > 0:
            raise NonPositiveQ0(f"q0_z must be positive, got {self.q0_z!r}")
        if self.state is None:
            self.state = ClassificationState(self.training.K)

    @property
    def last_ah(self) -> float:
        return self.log[-1].ah if self.log else -math.inf

    def _check(self, cycle: CycleRecord) -> None:
        if cycle.cycle_type is not CycleType.AGING:
            raise WrongCycleType(f"cycle {cycle.cycle_index} is {cycle.cycle_type.value}")
        floor = max(self.last_ah, self.prev_cycle.ah_ch if self.prev_cycle else -math.inf)
        if not cycle.ah_ch > floor:
            raise StaleCycle(f"cycle at Ah={cycle.ah_ch!r} does not follow Ah={floor!r}")

    def prime(self, cycle: CycleRecord) -> None:
        """Record an aging cycle as the predecessor without estimating on it."""
        self._check(cycle)
        self.prev_cycle = cycle

    def step(self, cycle: CycleRecord) -> FusionEstimate:
        self._check(cycle)
        x = build_feature_vector(cycle, self.prev_cycle, self.schema)
        q_age = float(x.entries[0]) if self.schema[0].name == "q_age" else cycle_q_age(cycle)
        ah = cycle.ah_ch
        classify_step(self.state, self.training, q_age, ah)
        lam = self.state.lam
        q_ct = estimate_ct(self.training, lam, self.q0_z, ah)
        q_rg = enr.predict(self.model, x)
        w = weights(self.config, ah)
        q_hat = fuse(q_rg, q_ct, w)
        margin = math.nan
        if self.truth is not None:
            q = self.truth(ah)
            if q is not None and math.isfinite(q):
                margin = w[0] * abs(q_rg - q) + w[1] * abs(q_ct - q) - abs(q_hat - q)
        est = FusionEstimate(
            ah=ah, q_rg=q_rg, q_ct=q_ct, w1=w[0], w2=w[1], q_hat=q_hat,
            s_n=self.state.s_seq[-1], lam=tuple(float(v) for v in lam),
            bibo_margin=margin, cycle_index=cycle.cycle_index,
        )
        self.log.append(est)
        self.prev_cycle = cycle
        return est


def step(session: Session, cycle: CycleRecord) -> FusionEstimate:
    return session.step(cycle)


def log_columns(K: int) -> list[str]:
    return ["ah", "q_rg", "q_ct", "w1", "w2", "q_hat", "s_n"] + [
        f"lambda_{k}" for k in range(1, K + 1)
    ]


def write_log_csv(log: Sequence[FusionEstimate], path, K: Optional[int] = None) -> None:
    if K is None:
        K = len(log[0].lam) if log else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(log_columns(K))
        for e in log:
            w.writerow(
                [repr(e.ah), repr(e.q_rg), repr(e.q_ct), repr(e.w1), repr(e.w2),
                 repr(e.q_hat), e.s_n] + [repr(v) for v in e.lam]
            )


def log_arrays(log: Sequence[FusionEstimate]) -> dict[str, np.ndarray]:
    keys = ("ah", "q_rg", "q_ct", "w1", "w2", "q_hat", "s_n")
    return {k: np.array([getattr(e, k) for e in log]) for k in keys}
