import numpy as np
import pytest

from slsoh.errors import ConfigError, DuplicateTimestamp, EmptyFile, SchemaError
from slsoh.io import RunConfig, ingest, load_config, parse_config, read_key_values, write_telemetry
from slsoh.trajectory import Samples

HEADER = "cell_id,t_s,current_a,voltage_v,temperature_c\n"


def test_two_cell_file(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "a,0,0,3.7,25\nb,0,1,3.7,25\na,10,1,3.7,25\nb,5,0,3.6,25\na,20,0,3.7,25\n")
    streams = ingest(p)
    assert sorted(streams) == ["a", "b"]
    assert len(streams["a"]) == 3 and len(streams["b"]) == 2
    assert streams["b"].t.tolist() == [0.0, 5.0]


def test_rows_are_sorted(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "a,20,0,3.7,25\na,0,1,3.7,25\na,10,2,3.7,25\n")
    s = ingest(p)["a"]
    assert s.t.tolist() == [0.0, 10.0, 20.0] and s.current.tolist() == [1.0, 2.0, 0.0]


def test_nan_row_named(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "a,0,0,3.7,25\na,10,nan,3.7,25\n")
    with pytest.raises(SchemaError, match=r"t\.csv:3"):
        ingest(p)


@pytest.mark.parametrize(
    "body",
    ["a,0,0,3.7\n", "a,0,x,3.7,25\n", ",0,0,3.7,25\n", "a,-1,0,3.7,25\n"],
)
def test_malformed_rows(tmp_path, body):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + body)
    with pytest.raises(SchemaError):
        ingest(p)


def test_bad_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("cell,t,i,v,T\na,0,0,3.7,25\n")
    with pytest.raises(SchemaError):
        ingest(p)


def test_duplicate_timestamp(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text(HEADER + "a,0,0,3.7,25\na,10,1,3.7,25\na,10,2,3.7,25\n")
    with pytest.raises(DuplicateTimestamp, match=r"t\.csv:3.*t\.csv:4"):
        ingest(p)


def test_empty_inputs(tmp_path):
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(EmptyFile):
        ingest(tmp_path / "e.csv")
    (tmp_path / "h.csv").write_text(HEADER)
    with pytest.raises(EmptyFile):
        ingest(tmp_path / "h.csv")
    (tmp_path / "d").mkdir()
    with pytest.raises(EmptyFile):
        ingest(tmp_path / "d")


def test_synthetic_round_trip(tmp_path, small_fleet):
    small_fleet.write(tmp_path)
    streams = ingest(tmp_path)
    assert sorted(streams) == small_fleet.cell_ids
    for c in small_fleet.cells:
        assert streams[c.cell_id] == c.samples


def test_write_then_read_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    s = Samples(np.cumsum(rng.uniform(0.1, 9, 100)), rng.normal(size=100), rng.normal(size=100), rng.normal(size=100))
    write_telemetry(s, tmp_path / "x.csv", "x")
    assert ingest(tmp_path / "x.csv")["x"] == s


def test_key_values(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\nlambda_grid = 0.1, 0.01  # trailing\n\nfolds=3\n")
    assert read_key_values(p) == {"lambda_grid": "0.1, 0.01", "folds": "3"}
    p.write_text("no equals sign\n")
    with pytest.raises(ConfigError):
        read_key_values(p)


def test_config_parsing(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text(
        "lambda_grid = 0.1,0.01\nmix_grid = 0.5\nfolds = 3\nlearn_alpha = 2e-4\n"
        "segment.rest_dwell_s = 900\ntest_cell = cell_02\nsynth.n_cells = 5\n"
    )
    cfg = load_config(p)
    assert cfg.lambda_grid == (0.1, 0.01) and cfg.mix_grid == (0.5,) and cfg.folds == 3
    assert cfg.segmentation.rest_dwell_s == 900.0 and cfg.test_cell == "cell_02"
    assert cfg.fusion().alpha == 2e-4
    assert RunConfig().fusion(ah_max=1e4).alpha == pytest.approx(5e-6)


@pytest.mark.parametrize(
    "kv",
    [{"lambda_grid": ""}, {"mix_grid": "2"}, {"folds": "1"}, {"bogus": "1"},
     {"segment.nope": "1"}, {"segment.rate_tolerance": "0.5"}, {"folds": "x"}],
)
def test_config_errors(kv):
    with pytest.raises(ConfigError):
        parse_config(kv)


def test_fusion_needs_a_setting():
    with pytest.raises(ConfigError):
        RunConfig().fusion()
