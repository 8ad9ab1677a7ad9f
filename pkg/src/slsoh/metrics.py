"""Error metrics for capacity estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NonPositiveTruth


@dataclass(frozen=True)
class MetricReport:
    mape: float  # %
    rmse: float  # Ah
    rmspe: float  # %
    m: int


def evaluate(y_true, y_hat) -> MetricReport:
    """MAPE and RMSPE in percent, RMSE in the units of the inputs."""
    y = np.asarray(y_true, dtype=float)
    yh = np.asarray(y_hat, dtype=float)
    if y.ndim != 1 or yh.shape != y.shape:
        raise LengthMismatch(f"y_true {y.shape} vs y_hat {yh.shape}")
    if len(y) == 0:
        raise LengthMismatch("need at least one sample")
    if np.any(~(y > 0)):
        raise NonPositiveTruth("percentage metrics need strictly positive truth")
    err = yh - y
    rel = err / y
    return MetricReport(
        mape=float(np.mean(np.abs(rel)) * 100.0),
        rmse=float(np.sqrt(np.mean(err**2))),
        rmspe=float(np.sqrt(np.mean(rel**2)) * 100.0),
        m=len(y),
    )
