"""Leave-one-out evaluation, learning-rate sweeps and report files.

A dataset is a mapping ``cell_id -> CellData``, each built from one raw
telemetry stream: aging cycles supply the features and the aging-charge
trajectory, C/20 capacity tests supply the ground-truth labels and ``q0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import enr
from .cluster import TrainingCell, TrainingSet, bibo_bound
from .errors import InsufficientCells, InvalidTrajectory
from .features import (
    DEFAULT_SCHEMA,
    CycleRecord,
    CycleType,
    Feature,
    FeatureVector,
    SegmentationConfig,
    cycle_features,
    cycle_q_age,
    cycle_q_c20,
    feature_names,
    segment_cycles,
)
from .fusion import FusionConfig, FusionEstimate, Session, log_arrays, write_log_csv
from .io import RunConfig, write_rows
from .metrics import MetricReport, evaluate
from .trajectory import Samples, Trajectory, normalize_capacity

# learning-rate ranges of the sensitivity study, five points each
PAPER_ALPHA_RANGES = {
    "r1": np.linspace(0.0, 5e-6, 5),
    "r2": np.linspace(6e-6, 1.0, 5),
    "r3": np.linspace(11.0, 100.0, 5),
}


@dataclass(frozen=True, eq=False)
class CellData:
    cell_id: str
    aging: tuple[CycleRecord, ...]
    features: tuple[FeatureVector, ...]
    q_age: Trajectory
    truth: Trajectory
    q0: float

    @property
    def q_bar(self) -> Trajectory:
        return normalize_capacity(self.truth, self.q0)

    @property
    def ah_total(self) -> float:
        return float(max(self.truth.ah[-1], self.q_age.ah[-1]))

    def truth_at(self, ah: float) -> float:
        """Interpolated label; NaN outside the labelled span."""
        lo, hi = self.truth.span
        return self.truth(ah) if lo <= ah <= hi else math.nan


def extract_cell(
    cell_id: str,
    samples: Samples,
    seg: SegmentationConfig = SegmentationConfig(),
    schema: Sequence[Feature] = DEFAULT_SCHEMA,
) -> CellData:
    records = segment_cycles(samples, seg, cell_id)
    aging = tuple(r for r in records if r.cycle_type is CycleType.AGING)
    c20 = [r for r in records if r.cycle_type is CycleType.C20_CAPACITY]
    if len(c20) < 2 or not aging:
        raise InvalidTrajectory(
            f"cell {cell_id}: {len(c20)} C/20 tests and {len(aging)} aging cycles; "
            "need at least 2 and 1"
        )
    # same entries as build_feature_vector, with each cycle's half computed once
    per_cycle = [cycle_features(c, schema) for c in aging]
    names = feature_names(schema)
    feats = tuple(
        FeatureVector(c.ah_ch, np.concatenate((cur, prev)), names)
        for c, cur, prev in zip(aging, per_cycle, [np.zeros(len(schema))] + per_cycle[:-1])
    )
    q_age = Trajectory([c.ah_ch for c in aging], [cycle_q_age(c) for c in aging])
    truth = Trajectory([c.ah_ch for c in c20], [cycle_q_c20(c) for c in c20])
    return CellData(cell_id, aging, feats, q_age, truth, float(truth.values[0]))


def load_dataset(
    streams: Mapping[str, Samples],
    seg: SegmentationConfig = SegmentationConfig(),
    schema: Sequence[Feature] = DEFAULT_SCHEMA,
) -> dict[str, CellData]:
    return {cid: extract_cell(cid, s, seg, schema) for cid, s in sorted(streams.items())}


def build_training_set(cells: Sequence[CellData]) -> TrainingSet:
    return TrainingSet(
        tuple(
            TrainingCell(c.cell_id, c.q_age, c.q_bar, c.q0, c.features) for c in cells
        )
    )


def regression_rows(cells: Sequence[CellData]) -> tuple[np.ndarray, np.ndarray]:
    """Feature rows of every labelled aging cycle, sorted by Ah."""
    rows, ys, ahs = [], [], []
    for c in cells:
        lo, hi = c.truth.span
        for fv in c.features:
            if lo <= fv.ah <= hi:
                rows.append(fv.entries)
                ys.append(c.truth(fv.ah))
                ahs.append(fv.ah)
    if not rows:
        raise InsufficientCells("no labelled aging cycles in the training cells")
    order = np.argsort(ahs, kind="stable")
    return np.asarray(rows)[order], np.asarray(ys)[order]


def train_offline(cells: Sequence[CellData], config: RunConfig) -> enr.EnrModel:
    X, Y = regression_rows(cells)
    names = cells[0].features[0].names if cells[0].features else feature_names()
    return enr.fit_cv(
        X, Y, config.lambda_grid, config.mix_grid, folds=min(config.folds, len(Y)), names=names
    )


def default_ah_max(cells: Sequence[CellData]) -> float:
    """Largest throughput seen in the given cells, the stand-in for expected lifetime Ah."""
    return max(c.ah_total for c in cells)


def replay(
    test: CellData,
    model: enr.EnrModel,
    training: TrainingSet,
    fusion: FusionConfig,
    with_truth: bool = True,
) -> Session:
    """Feed the test cell's aging cycles through an online session.

    Cycles before the training span only seed the predecessor features; the
    replay stops at the end of the span (no extrapolation of training curves).
    """
    session = Session(
        model, training, fusion, test.q0, truth=test.truth_at if with_truth else None
    )
    lo, hi = training.span
    for cycle in test.aging:
        if cycle.ah_ch < lo:
            session.prime(cycle)
        elif cycle.ah_ch <= hi:
            session.step(cycle)
        else:
            break
    return session


def score_log(log: Sequence[FusionEstimate], truth: Trajectory) -> tuple[MetricReport, MetricReport]:
    """Metrics of (adaptive, ENR-only) estimates at the labelled points inside the log span."""
    if not log:
        raise InsufficientCells("empty estimate log")
    arr = log_arrays(log)
    ah = arr["ah"]
    keep = (truth.ah >= ah[0]) & (truth.ah <= ah[-1])
    if not np.any(keep):
        raise InsufficientCells("no labelled points inside the estimated span")
    at, q = truth.ah[keep], truth.values[keep]
    return (
        evaluate(q, np.interp(at, ah, arr["q_hat"])),
        evaluate(q, np.interp(at, ah, arr["q_rg"])),
    )


@dataclass(frozen=True, eq=False)
class FoldResult:
    cell_id: str
    adaptive: MetricReport
    enr_only: MetricReport
    session: Session = field(repr=False)
    bibo: float = math.nan  # bound on the clustering error over the replay
    ct_error: float = math.nan  # observed sup error of the clustering estimate


@dataclass(frozen=True, eq=False)
class LooTable:
    folds: tuple[FoldResult, ...]

    @property
    def mean_rmspe_adaptive(self) -> float:
        return float(np.mean([f.adaptive.rmspe for f in self.folds]))

    @property
    def mean_rmspe_enr(self) -> float:
        return float(np.mean([f.enr_only.rmspe for f in self.folds]))

    def rows(self) -> list[tuple[str, float, float]]:
        return [(f.cell_id, f.adaptive.rmspe, f.enr_only.rmspe) for f in self.folds]

    def write_csv(self, path) -> Path:
        rows = self.rows() + [("mean", self.mean_rmspe_adaptive, self.mean_rmspe_enr)]
        return write_rows(path, ("cell_id", "rmspe_adaptive", "rmspe_enr"), rows)


def _ct_sup_error(session: Session, test: CellData) -> tuple[float, float]:
    log = session.log
    ah = np.array([e.ah for e in log])
    lo, hi = test.truth.span
    inside = (ah >= lo) & (ah <= hi)
    if not np.any(inside):
        return math.nan, math.nan
    grid = ah[inside]
    q_ct = np.array([e.q_ct for e in log])[inside]
    err = float(np.max(np.abs(q_ct - test.truth(grid))))
    bound = bibo_bound(session.training, test.q_bar, test.q0, grid)
    return bound, err


def run_fold(
    test: CellData, train: Sequence[CellData], config: RunConfig, model: Optional[enr.EnrModel] = None
) -> FoldResult:
    if len(train) < 2:
        raise InsufficientCells(f"{len(train)} training cell(s); need at least 2")
    model = train_offline(train, config) if model is None else model
    training = build_training_set(train)
    session = replay(test, model, training, config.fusion(default_ah_max(train)))
    adaptive, enr_only = score_log(session.log, test.truth)
    bound, err = _ct_sup_error(session, test)
    return FoldResult(test.cell_id, adaptive, enr_only, session, bound, err)


def leave_one_out(dataset: Mapping[str, CellData], config: RunConfig = RunConfig()) -> LooTable:
    """Hold out each cell in turn; train on the rest and replay the held-out cell."""
    if len(dataset) < 3:
        raise InsufficientCells(f"leave-one-out needs >= 3 cells, got {len(dataset)}")
    ids = sorted(dataset)
    folds = tuple(
        run_fold(dataset[z], [dataset[c] for c in ids if c != z], config) for z in ids
    )
    return LooTable(folds)


def alpha_sweep(
    dataset: Mapping[str, CellData],
    test_cell: str,
    alpha_values: Sequence[float],
    config: RunConfig = RunConfig(),
) -> list[tuple[float, float]]:
    """RMSE (Ah) of the fused estimate for each learning rate; ENR is trained once."""
    alpha_values = [float(a) for a in alpha_values]
    if not alpha_values or any(not a >= 0 for a in alpha_values):
        raise ValueError("alpha_values must be non-empty and >= 0")
    if test_cell not in dataset:
        raise KeyError(f"unknown test cell {test_cell!r}")
    train = [dataset[c] for c in sorted(dataset) if c != test_cell]
    if len(train) < 2:
        raise InsufficientCells(f"{len(train)} training cell(s); need at least 2")
    model = train_offline(train, config)
    training = build_training_set(train)
    out = []
    for a in alpha_values:
        session = replay(dataset[test_cell], model, training, FusionConfig(learn_alpha=a), False)
        out.append((a, score_log(session.log, dataset[test_cell].truth)[0].rmse))
    return out


def write_sweep_csv(results: Sequence[tuple[float, float]], path) -> Path:
    return write_rows(path, ("alpha", "rmse_ah"), results)


def emit_report(fold: FoldResult, truth: Trajectory, out_dir) -> list[Path]:
    """Trajectory, pointwise-error and classification CSVs plus a summary for one test cell."""
    log = fold.session.log
    if not log:
        raise InsufficientCells("empty estimate log")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cid = fold.cell_id
    K = fold.session.training.K
    paths = []

    traj = out / f"{cid}_trajectories.csv"
    write_log_csv(log, traj, K)
    paths.append(traj)

    lo, hi = truth.span
    rows, missing = [], 0
    for e in log:
        if not lo <= e.ah <= hi:
            missing += 1
            continue
        q = truth(e.ah)
        rows.append((e.ah, q, 100.0 * abs(e.q_hat - q) / q, 100.0 * abs(e.q_rg - q) / q))
    paths.append(
        write_rows(out / f"{cid}_errors.csv", ("ah", "q_true", "err_adaptive_pct", "err_enr_pct"), rows)
    )
    paths.append(
        write_rows(out / f"{cid}_classification.csv", ("ah", "s_n"), [(e.ah, e.s_n) for e in log])
    )

    lines = [f"cell {cid}", f"estimates {len(log)}", f"unlabelled_points_omitted {missing}"]
    for name, rep in (("adaptive", fold.adaptive), ("enr", fold.enr_only)):
        lines.append(
            f"{name}: mape_pct={rep.mape!r} rmse_ah={rep.rmse!r} rmspe_pct={rep.rmspe!r} m={rep.m}"
        )
    summary = out / f"{cid}_summary.txt"
    summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths.append(summary)
    return paths
