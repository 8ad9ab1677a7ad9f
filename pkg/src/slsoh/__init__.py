"""Capacity estimation for second-life battery cells.

An offline elastic-net regression is fused with an online estimator that
matches a monitored cell's aging-charge trajectory against training cells.
"""

from .cluster import (
    ClassificationState,
    TrainingCell,
    TrainingSet,
    bibo_bound,
    classification_index_sequence,
    classify_step,
    estimate_ct,
    lambda_weights,
    trajectory_distance,
)
from .enr import EnrModel, fit, fit_cv, predict
from .errors import SohError
from .features import CycleRecord, CycleType, FeatureVector, build_feature_vector, segment_cycles
from .fusion import FusionConfig, FusionEstimate, Session, fuse, weights
from .harness import alpha_sweep, emit_report, leave_one_out, load_dataset
from .io import RunConfig, ingest
from .metrics import MetricReport, evaluate
from .synth import FleetSpec, generate
from .trajectory import (
    Samples,
    TimeSample,
    Trajectory,
    accumulate_ah,
    align_to_grid,
    integrate_charge,
    normalize_capacity,
)

__version__ = "0.1.0"
