"""Telemetry CSV files and plain-text ``key = value`` configuration."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import ConfigError, DuplicateTimestamp, EmptyFile, SchemaError
from .features import SegmentationConfig
from .fusion import FusionConfig
from .trajectory import Samples

TELEMETRY_HEADER = ("cell_id", "t_s", "current_a", "voltage_v", "temperature_c")


def read_key_values(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def write_telemetry(samples: Samples, path, cell_id: str) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TELEMETRY_HEADER)
        for t, i, v, temp in zip(samples.t, samples.current, samples.voltage, samples.temperature):
            w.writerow([cell_id, repr(float(t)), repr(float(i)), repr(float(v)), repr(float(temp))])
    return Path(path)


def _telemetry_files(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(
            p for p in path.glob("*.csv") if p.name != "ground_truth.csv"
        )
        if not files:
            raise EmptyFile(f"no telemetry CSV files in {path}")
        return files
    if not path.exists():
        raise EmptyFile(f"{path} does not exist")
    return [path]


def _read_rows(path: Path, rows: dict[str, list[tuple[float, ...]]], where: dict) -> None:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        if tuple(h.strip() for h in header) != TELEMETRY_HEADER:
            raise SchemaError(f"{path}: header {header!r} != {','.join(TELEMETRY_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(TELEMETRY_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected 5 fields, got {len(rec)}")
            cell = rec[0].strip()
            if not cell:
                raise SchemaError(f"{path}:{lineno}: empty cell_id")
            try:
                vals = tuple(float(v) for v in rec[1:])
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: non-numeric field in {rec!r}") from None
            bad = [h for h, v in zip(TELEMETRY_HEADER[1:], vals) if not math.isfinite(v)]
            if bad:
                raise SchemaError(f"{path}:{lineno}: non-finite {', '.join(bad)}")
            rows.setdefault(cell, []).append(vals)
            where.setdefault(cell, []).append(f"{path}:{lineno}")


def ingest(path) -> dict[str, Samples]:
    """Read one telemetry CSV, or every ``*.csv`` in a directory, into per-cell streams.

    Rows are sorted by time within each cell; repeated timestamps are rejected.
    """
    rows: dict[str, list] = {}
    where: dict[str, list[str]] = {}
    for f in _telemetry_files(Path(path)):
        _read_rows(f, rows, where)
    if not rows:
        raise EmptyFile(f"no telemetry rows under {path}")
    streams = {}
    for cell in sorted(rows):
        arr = np.array(rows[cell], dtype=float)
        order = np.argsort(arr[:, 0], kind="stable")
        arr = arr[order]
        dup = np.flatnonzero(np.diff(arr[:, 0]) == 0)
        if len(dup):
            a, b = order[dup[0]], order[dup[0] + 1]
            raise DuplicateTimestamp(
                f"cell {cell}: t_s={arr[dup[0], 0]!r} repeated at "
                f"{where[cell][a]} and {where[cell][b]}"
            )
        if arr[0, 0] < 0:
            raise SchemaError(f"cell {cell}: negative t_s at {where[cell][order[0]]}")
        streams[cell] = Samples(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 3].copy())
    return streams


def _floats(value: str, key: str) -> list[float]:
    try:
        out = [float(v) for v in value.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {value!r}") from None
    if not out:
        raise ConfigError(f"{key} must not be empty")
    return out


@dataclass(frozen=True)
class RunConfig:
    telemetry: Optional[Path] = None
    out: Path = Path("out")
    lambda_grid: tuple[float, ...] = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
    mix_grid: tuple[float, ...] = (0.1, 0.5, 0.9)
    folds: int = 5
    learn_alpha: Optional[float] = None
    ah_max: Optional[float] = None
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    seed: int = 0
    test_cell: Optional[str] = None
    alpha_values: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.lambda_grid or not self.mix_grid:
            raise ConfigError("lambda_grid and mix_grid must be non-empty")
        if any(v < 0 for v in self.lambda_grid) or any(not 0 <= v <= 1 for v in self.mix_grid):
            raise ConfigError("lambda_grid needs values >= 0 and mix_grid values in [0, 1]")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.learn_alpha is not None and self.learn_alpha < 0:
            raise ConfigError("learn_alpha must be >= 0")
        if self.ah_max is not None and self.ah_max <= 0:
            raise ConfigError("ah_max must be > 0")
        if any(v < 0 for v in self.alpha_values):
            raise ConfigError("alpha_values must be >= 0")

    def fusion(self, ah_max: Optional[float] = None) -> FusionConfig:
        """Fusion settings; ``ah_max`` is the fallback when neither knob is configured."""
        if self.learn_alpha is not None:
            return FusionConfig(learn_alpha=self.learn_alpha)
        if self.ah_max is not None:
            return FusionConfig(ah_max=self.ah_max)
        if ah_max is None:
            raise ConfigError("set learn_alpha or ah_max")
        return FusionConfig(ah_max=ah_max)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_SEG_KEYS = {f.name for f in fields(SegmentationConfig)}


def parse_config(kv: dict[str, str], base: Optional[RunConfig] = None) -> RunConfig:
    """Build a :class:`RunConfig` from parsed key-value pairs.

    Segmentation thresholds use a ``segment.`` prefix, e.g. ``segment.rest_dwell_s``.
    """
    cfg = base or RunConfig()
    upd: dict = {}
    seg: dict = {}
    for key, value in kv.items():
        try:
            if key in ("telemetry", "out"):
                upd[key] = Path(value)
            elif key in ("lambda_grid", "mix_grid", "alpha_values"):
                upd[key] = tuple(_floats(value, key))
            elif key in ("folds", "seed"):
                upd[key] = int(value)
            elif key in ("learn_alpha", "ah_max"):
                upd[key] = float(value)
            elif key == "test_cell":
                upd[key] = value
            elif key.startswith("segment."):
                name = key.split(".", 1)[1]
                if name not in _SEG_KEYS:
                    raise ConfigError(f"unknown segmentation key {key!r}")
                seg[name] = type(getattr(cfg.segmentation, name))(value)
            elif key.startswith("synth."):
                continue  # consumed by the synth subcommand
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(f"{key}: {err}") from None
    if seg:
        try:
            upd["segmentation"] = replace(cfg.segmentation, **seg)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    return replace(cfg, **upd)


def load_config(path) -> RunConfig:
    return parse_config(read_key_values(path))


def write_rows(path, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    """CSV with floats written as round-trippable reprs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return Path(path)
