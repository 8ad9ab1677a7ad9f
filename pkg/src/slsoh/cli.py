"""Command-line entry point: ``slsoh <subcommand> [--config FILE] [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import enr, harness, synth
from .cluster import save_state
from .errors import ConfigError, SohError
from .fusion import write_log_csv
from .io import RunConfig, ingest, parse_config, read_key_values, write_rows

_SYNTH_TYPES = {f.name: f.type for f in fields(synth.FleetSpec)}


def _fleet_spec(kv: dict[str, str], args) -> synth.FleetSpec:
    spec = synth.FleetSpec()
    upd = {}
    for key, value in kv.items():
        if not key.startswith("synth."):
            continue
        name = key.split(".", 1)[1]
        if name not in _SYNTH_TYPES:
            raise ConfigError(f"unknown synth key {key!r}")
        current = getattr(spec, name)
        try:
            if isinstance(current, tuple):
                upd[name] = tuple(float(v) for v in value.split(","))
            elif isinstance(current, bool):
                upd[name] = value.lower() in ("1", "true", "yes")
            else:
                upd[name] = type(current)(value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    for name in ("n_cells", "n_groups", "cycles_per_cell", "noise_sigma"):
        if getattr(args, name, None) is not None:
            upd[name] = getattr(args, name)
    upd["seed"] = args.seed
    return replace(spec, **upd)


def _run_config(args) -> tuple[RunConfig, dict[str, str]]:
    kv = read_key_values(args.config) if args.config else {}
    cfg = parse_config(kv)
    over = dict(seed=args.seed, out=args.out)
    for name in ("telemetry", "learn_alpha", "ah_max", "test_cell"):
        over[name] = getattr(args, name, None)
    if over["telemetry"] is not None:
        over["telemetry"] = Path(over["telemetry"])
    return cfg.with_overrides(**over), kv


def _dataset(cfg: RunConfig):
    if cfg.telemetry is None:
        raise ConfigError("no telemetry path: pass --telemetry or set 'telemetry' in the config")
    return harness.load_dataset(ingest(cfg.telemetry), cfg.segmentation)


def _pick(dataset, cell: Optional[str]) -> str:
    if cell is None:
        raise ConfigError("pass --test-cell or set 'test_cell' in the config")
    if cell not in dataset:
        raise ConfigError(f"unknown cell {cell!r}; have {', '.join(sorted(dataset))}")
    return cell


def cmd_synth(args, cfg: RunConfig, kv) -> None:
    fleet = synth.generate(_fleet_spec(kv, args))
    paths = fleet.write(cfg.out)
    print(f"wrote {len(paths)} files to {cfg.out}")


def cmd_ingest(args, cfg: RunConfig, kv) -> None:
    streams = ingest(cfg.telemetry) if cfg.telemetry else None
    if streams is None:
        raise ConfigError("no telemetry path: pass --telemetry or set 'telemetry' in the config")
    from .features import segment_cycles

    rows = []
    for cid, s in streams.items():
        kinds = [r.cycle_type.value for r in segment_cycles(s, cfg.segmentation, cid)]
        counts = {k: kinds.count(k) for k in ("aging", "c20_capacity", "hppc", "ocv")}
        rows.append((cid, len(s), *counts.values()))
        print(f"{cid}: {len(s)} samples, " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_rows(
        cfg.out / "ingest_summary.csv",
        ("cell_id", "samples", "aging", "c20_capacity", "hppc", "ocv"),
        rows,
    )


def cmd_fit_offline(args, cfg: RunConfig, kv) -> None:
    ds = _dataset(cfg)
    cells = [ds[c] for c in sorted(ds) if c != args.exclude]
    model = harness.train_offline(cells, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    enr.save_model(model, cfg.out / "model.txt")
    print(f"lambda_reg={model.lambda_reg!r} mix={model.mix!r} sweeps={model.sweeps}")


def cmd_run_online(args, cfg: RunConfig, kv) -> None:
    ds = _dataset(cfg)
    z = _pick(ds, cfg.test_cell)
    train = [ds[c] for c in sorted(ds) if c != z]
    model = enr.load_model(args.model) if args.model else harness.train_offline(train, cfg)
    training = harness.build_training_set(train)
    session = harness.replay(ds[z], model, training, cfg.fusion(harness.default_ah_max(train)))
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_log_csv(session.log, cfg.out / f"{z}_estimates.csv", training.K)
    save_state(session.state, cfg.out / f"{z}_state.txt")
    last = session.log[-1]
    print(f"{z}: {len(session.log)} estimates, last q_hat={last.q_hat:.4f} Ah at {last.ah:.1f} Ah")


def cmd_leave_one_out(args, cfg: RunConfig, kv) -> None:
    table = harness.leave_one_out(_dataset(cfg), cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    table.write_csv(cfg.out / "leave_one_out.csv")
    print(f"{'cell':<12}{'adaptive %':>12}{'ENR %':>12}")
    for cid, a, e in table.rows():
        print(f"{cid:<12}{a:>12.4f}{e:>12.4f}")
    print(f"{'mean':<12}{table.mean_rmspe_adaptive:>12.4f}{table.mean_rmspe_enr:>12.4f}")


def cmd_alpha_sweep(args, cfg: RunConfig, kv) -> None:
    ds = _dataset(cfg)
    z = _pick(ds, cfg.test_cell)
    if args.alphas:
        alphas = [float(v) for v in args.alphas.split(",")]
    elif cfg.alpha_values:
        alphas = list(cfg.alpha_values)
    else:
        alphas = [float(a) for r in harness.PAPER_ALPHA_RANGES.values() for a in r]
    results = harness.alpha_sweep(ds, z, alphas, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    harness.write_sweep_csv(results, cfg.out / f"{z}_alpha_sweep.csv")
    for a, rmse in results:
        print(f"alpha={a:<12g} rmse={rmse:.6f} Ah")


def cmd_report(args, cfg: RunConfig, kv) -> None:
    ds = _dataset(cfg)
    cells = [_pick(ds, cfg.test_cell)] if cfg.test_cell else sorted(ds)
    if len(ds) < 3:
        raise harness.InsufficientCells(f"report needs >= 3 cells, got {len(ds)}")
    n = 0
    for z in cells:
        fold = harness.run_fold(ds[z], [ds[c] for c in sorted(ds) if c != z], cfg)
        n += len(harness.emit_report(fold, ds[z].truth, cfg.out))
    print(f"wrote {n} files to {cfg.out}")


COMMANDS = {
    "synth": (cmd_synth, "generate a synthetic fleet (telemetry + ground truth)"),
    "ingest": (cmd_ingest, "validate telemetry and summarise the segmented cycles"),
    "fit-offline": (cmd_fit_offline, "fit the elastic-net model and save it"),
    "run-online": (cmd_run_online, "replay one cell through the online estimator"),
    "leave-one-out": (cmd_leave_one_out, "hold out each cell in turn and tabulate RMSPE"),
    "alpha-sweep": (cmd_alpha_sweep, "RMSE of the fused estimate across learning rates"),
    "report": (cmd_report, "write trajectory, error and classification CSVs per cell"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None, help="output directory")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--telemetry", help="telemetry CSV file or directory of CSVs")
    data.add_argument("--learn-alpha", dest="learn_alpha", type=float)
    data.add_argument("--ah-max", dest="ah_max", type=float)
    data.add_argument("--test-cell", dest="test_cell")

    p = argparse.ArgumentParser(prog="slsoh", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        parents = [common] if name == "synth" else [common, data]
        sp = sub.add_parser(name, parents=parents, help=help_)
        if name == "synth":
            sp.add_argument("--n-cells", dest="n_cells", type=int)
            sp.add_argument("--n-groups", dest="n_groups", type=int)
            sp.add_argument("--cycles", dest="cycles_per_cell", type=int)
            sp.add_argument("--noise-sigma", dest="noise_sigma", type=float)
        elif name == "fit-offline":
            sp.add_argument("--exclude", help="leave this cell out of the training rows")
        elif name == "run-online":
            sp.add_argument("--model", help="model file from fit-offline (default: refit)")
        elif name == "alpha-sweep":
            sp.add_argument("--alphas", help="comma-separated learning rates, 1/Ah")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, kv = _run_config(args)
        COMMANDS[args.command][0](args, cfg, kv)
    except SohError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: IoError: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
