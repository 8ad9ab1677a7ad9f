import pytest

from slsoh.cli import main

SYNTH = ["synth", "--seed", "7", "--n-cells", "4", "--cycles", "30"]


@pytest.fixture(scope="module")
def fleet_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fleet")
    assert main(SYNTH + ["--out", str(out)]) == 0
    return out


def run(*args):
    return main([str(a) for a in args])


def test_synth_writes_fleet(fleet_dir):
    names = sorted(p.name for p in fleet_dir.iterdir())
    assert names == ["cell_01.csv", "cell_02.csv", "cell_03.csv", "cell_04.csv", "ground_truth.csv"]


def test_synth_config_keys(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("synth.n_cells = 3\nsynth.cycles_per_cell = 10\nsynth.rpt_every = 5\n")
    assert run("synth", "--config", cfg, "--out", tmp_path / "f") == 0
    assert len(list((tmp_path / "f").glob("cell_*.csv"))) == 3


def test_all_subcommands(fleet_dir, tmp_path, capsys):
    o = tmp_path / "o"
    base = ["--telemetry", fleet_dir, "--out", o]
    assert run("ingest", *base) == 0
    assert run("fit-offline", *base, "--exclude", "cell_01") == 0
    assert run("run-online", *base, "--test-cell", "cell_01", "--model", o / "model.txt") == 0
    assert run("leave-one-out", *base) == 0
    assert run("alpha-sweep", *base, "--test-cell", "cell_02", "--alphas", "0,1e-4,5") == 0
    assert run("report", *base, "--test-cell", "cell_03") == 0
    produced = {p.name for p in o.iterdir()}
    assert {
        "ingest_summary.csv", "model.txt", "cell_01_estimates.csv", "cell_01_state.txt",
        "leave_one_out.csv", "cell_02_alpha_sweep.csv", "cell_03_trajectories.csv",
        "cell_03_errors.csv", "cell_03_classification.csv", "cell_03_summary.txt",
    } <= produced
    assert "mean" in capsys.readouterr().out


def test_outputs_are_deterministic(fleet_dir, tmp_path):
    for d in ("a", "b"):
        assert run("leave-one-out", "--telemetry", fleet_dir, "--out", tmp_path / d) == 0
        assert run("run-online", "--telemetry", fleet_dir, "--test-cell", "cell_02", "--out", tmp_path / d) == 0
    for name in ("leave_one_out.csv", "cell_02_estimates.csv", "cell_02_state.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_synth_is_deterministic(tmp_path):
    assert main(SYNTH + ["--out", str(tmp_path / "a")]) == 0
    assert main(SYNTH + ["--out", str(tmp_path / "b")]) == 0
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_errors_are_categorised(fleet_dir, tmp_path, capsys):
    assert run("ingest", "--telemetry", tmp_path / "missing") != 0
    assert "error: EmptyFile:" in capsys.readouterr().err
    assert run("run-online", "--telemetry", fleet_dir, "--test-cell", "nope", "--out", tmp_path) != 0
    assert "error: ConfigError:" in capsys.readouterr().err
    bad = tmp_path / "bad.txt"
    bad.write_text("folds = 1\n")
    assert run("leave-one-out", "--telemetry", fleet_dir, "--config", bad) != 0
    assert "error: ConfigError:" in capsys.readouterr().err
    assert run("synth", "--n-cells", "1", "--out", tmp_path / "s") != 0
    assert "error: InvalidSpec:" in capsys.readouterr().err
