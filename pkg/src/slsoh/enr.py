"""Elastic-net regression fitted by cyclic coordinate descent.

The objective, on column-standardised features ``Z`` and centred target ``y``::

    (1/2n) ||y - Z b||^2 + lam * ((1 - mix)/2 ||b||^2 + mix ||b||_1)

Coordinate descent runs on the Gram matrix ``Z'Z/n``, which keeps each sweep at
O(m^2) regardless of the number of rows. Coefficients stay in standardised
units; the fitted scaler maps raw features onto them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .errors import DidNotConverge, DimensionMismatch
from .features import FeatureVector

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000


@njit(cache=True)
def _soft_threshold(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def _objective(beta, gram, xty, yty, l1, l2):
    m = beta.shape[0]
    quad = 0.0
    for j in range(m):
        acc = 0.0
        for k in range(m):
            acc += gram[j, k] * beta[k]
        quad += beta[j] * acc
    lin = 0.0
    pen1 = 0.0
    pen2 = 0.0
    for j in range(m):
        lin += beta[j] * xty[j]
        pen1 += abs(beta[j])
        pen2 += beta[j] * beta[j]
    return 0.5 * (yty - 2.0 * lin + quad) + 0.5 * l2 * pen2 + l1 * pen1


@njit(cache=True)
def _coordinate_descent(gram, xty, yty, l1, l2, beta, tol, max_sweeps):
    m = beta.shape[0]
    grad = xty.copy()
    for j in range(m):
        for k in range(m):
            grad[j] -= gram[j, k] * beta[k]
    history = np.empty(max_sweeps + 1)
    history[0] = _objective(beta, gram, xty, yty, l1, l2)
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(m):
            d = gram[j, j]
            if d <= 0.0:
                continue
            new = _soft_threshold(grad[j] + d * beta[j], l1) / (d + l2)
            delta = new - beta[j]
            if delta != 0.0:
                for k in range(m):
                    grad[k] -= gram[k, j] * delta
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        history[sweep + 1] = _objective(beta, gram, xty, yty, l1, l2)
        if max_delta < tol:
            return sweep + 1, history[: sweep + 2], True
    return max_sweeps, history, False


def _constant_columns(mean, std):
    return std <= 1e-12 * np.maximum(1.0, np.abs(mean))


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # constant columns get std 1; their coefficients are pinned at zero
        std = np.where(_constant_columns(mean, std), 1.0, std)
        return cls(mean, std)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


@dataclass(frozen=True, eq=False)
class EnrModel:
    beta: np.ndarray
    beta0: float
    lambda_reg: float
    mix: float
    scaler: Scaler
    names: tuple[str, ...] = ()
    sweeps: int = 0
    objective_history: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def n_features(self) -> int:
        return len(self.beta)

    def predict(self, x) -> float | np.ndarray:
        return predict(self, x)


def _standardize(scaler: Scaler, X: np.ndarray) -> np.ndarray:
    Z = scaler.transform(X)
    Z[:, _constant_columns(X.mean(axis=0), X.std(axis=0))] = 0.0
    return Z


def _check_inputs(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch("X must be a 2-D feature matrix")
    if Y.ndim != 1 or len(Y) != X.shape[0]:
        raise DimensionMismatch(f"Y has shape {Y.shape}, X has {X.shape[0]} rows")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise DimensionMismatch(f"need n >= 2 and m >= 1, got {X.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("X and Y must be finite")
    return X, Y


def _check_penalty(lambda_reg, mix):
    if not lambda_reg >= 0:
        raise ValueError(f"lambda_reg must be >= 0, got {lambda_reg!r}")
    if not 0.0 <= mix <= 1.0:
        raise ValueError(f"mix must lie in [0, 1], got {mix!r}")


def _solve(Z, y, lambda_reg, mix, beta_init=None, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS):
    n = Z.shape[0]
    gram = Z.T @ Z / n
    xty = Z.T @ y / n
    yty = float(y @ y) / n
    beta = np.zeros(Z.shape[1]) if beta_init is None else np.array(beta_init, dtype=float)
    sweeps, history, ok = _coordinate_descent(
        gram, xty, yty, lambda_reg * mix, lambda_reg * (1.0 - mix), beta, tol, max_sweeps
    )
    if not ok:
        raise DidNotConverge(
            f"coordinate descent not converged after {max_sweeps} sweeps "
            f"(lambda_reg={lambda_reg!r}, mix={mix!r})"
        )
    return beta, sweeps, history.copy()


def fit(
    X,
    Y,
    lambda_reg: float,
    mix: float,
    *,
    names: Sequence[str] = (),
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    beta_init=None,
) -> EnrModel:
    """Fit an elastic-net model; stops once no coefficient moves by ``tol`` in a sweep."""
    X, Y = _check_inputs(X, Y)
    _check_penalty(lambda_reg, mix)
    scaler = Scaler.fit(X)
    Z = _standardize(scaler, X)
    beta0 = float(Y.mean())
    beta, sweeps, history = _solve(Z, Y - beta0, lambda_reg, mix, beta_init, tol, max_sweeps)
    if names and len(names) != X.shape[1]:
        raise DimensionMismatch(f"{len(names)} names for {X.shape[1]} features")
    return EnrModel(
        beta=beta,
        beta0=beta0,
        lambda_reg=float(lambda_reg),
        mix=float(mix),
        scaler=scaler,
        names=tuple(names),
        sweeps=sweeps,
        objective_history=history,
    )


def contiguous_folds(n: int, folds: int) -> list[np.ndarray]:
    if not 2 <= folds <= n:
        raise ValueError(f"folds must lie in [2, {n}], got {folds}")
    return np.array_split(np.arange(n), folds)


def fit_cv(
    X,
    Y,
    lambda_grid: Sequence[float],
    mix_grid: Sequence[float],
    folds: int = 5,
    *,
    names: Sequence[str] = (),
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> EnrModel:
    """Choose ``(lambda_reg, mix)`` by k-fold RMSE and refit on all rows.

    Folds are contiguous blocks of rows in the order given (callers pass rows
    sorted by Ah). Ties go to the first grid point, lambda-major.
    """
    X, Y = _check_inputs(X, Y)
    lambda_grid = [float(v) for v in lambda_grid]
    mix_grid = [float(v) for v in mix_grid]
    if not lambda_grid or not mix_grid:
        raise ValueError("lambda_grid and mix_grid must be non-empty")
    for lam in lambda_grid:
        for mix in mix_grid:
            _check_penalty(lam, mix)
    n = X.shape[0]
    if not 2 <= folds <= n:
        raise ValueError(f"folds must lie in [2, {n}], got {folds}")
    if len(lambda_grid) == 1 and len(mix_grid) == 1:
        return fit(X, Y, lambda_grid[0], mix_grid[0], names=names, tol=tol, max_sweeps=max_sweeps)

    scores = np.zeros((len(lambda_grid), len(mix_grid)))
    # warm starts run from strong to weak penalties along each mix
    lam_order = np.argsort(lambda_grid)[::-1]
    for idx in contiguous_folds(n, folds):
        train = np.ones(n, dtype=bool)
        train[idx] = False
        scaler = Scaler.fit(X[train])
        Z = _standardize(scaler, X[train])
        y0 = Y[train].mean()
        Zv = scaler.transform(X[idx])
        for b, mix in enumerate(mix_grid):
            beta = None
            for a in lam_order:
                beta, _, _ = _solve(Z, Y[train] - y0, lambda_grid[a], mix, beta, tol, max_sweeps)
                resid = Zv @ beta + y0 - Y[idx]
                scores[a, b] += np.sqrt(np.mean(resid**2)) / folds
    a, b = np.unravel_index(np.argmin(scores), scores.shape)
    return fit(
        X, Y, lambda_grid[a], mix_grid[b], names=names, tol=tol, max_sweeps=max_sweeps
    )


def predict(model: EnrModel, x) -> float | np.ndarray:
    """Capacity estimate for one feature vector (float) or a matrix of rows (array)."""
    if isinstance(x, FeatureVector):
        x = x.entries
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_features or x.ndim > 2:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got shape {x.shape}"
        )
    out = model.scaler.transform(x) @ model.beta + model.beta0
    return float(out) if x.ndim == 1 else out


def save_model(model: EnrModel, path) -> None:
    """Write the model as ``key = value`` lines (floats as round-trippable reprs)."""
    names = model.names or tuple(f"x{j}" for j in range(model.n_features))
    lines = [
        "# elastic-net model",
        f"n_features = {model.n_features}",
        f"lambda_reg = {model.lambda_reg!r}",
        f"mix = {model.mix!r}",
        f"beta0 = {model.beta0!r}",
    ]
    for j, name in enumerate(names):
        lines += [
            f"feature.{j}.name = {name}",
            f"feature.{j}.beta = {float(model.beta[j])!r}",
            f"feature.{j}.mean = {float(model.scaler.mean[j])!r}",
            f"feature.{j}.std = {float(model.scaler.std[j])!r}",
        ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> EnrModel:
    from .io import read_key_values

    kv = read_key_values(path)
    try:
        m = int(kv["n_features"])
        fields = {
            key: np.array([float(kv[f"feature.{j}.{key}"]) for j in range(m)])
            for key in ("beta", "mean", "std")
        }
        return EnrModel(
            beta=fields["beta"],
            beta0=float(kv["beta0"]),
            lambda_reg=float(kv["lambda_reg"]),
            mix=float(kv["mix"]),
            scaler=Scaler(fields["mean"], fields["std"]),
            names=tuple(kv[f"feature.{j}.name"] for j in range(m)),
        )
    except KeyError as err:
        raise DimensionMismatch(f"model file {path} lacks key {err.args[0]}") from None
