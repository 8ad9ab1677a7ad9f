import numpy as np
import pytest

from slsoh import synth
from slsoh.errors import InvalidSpec
from slsoh.features import CycleType, cycle_q_age, cycle_q_c20, segment_cycles
from slsoh.harness import extract_cell


def test_degenerate_spec_is_flat():
    spec = synth.FleetSpec(seed=2, n_cells=3, cycles_per_cell=15, rpt_every=5,
                           noise_sigma=0.0, fade_rate=0.0, hump_amplitude=0.0)
    fleet = synth.generate(spec)
    for c in fleet.cells:
        assert np.all(c.q_c20 == c.q0)
        assert np.all(c.q_true == c.q0)
        cell = extract_cell(c.cell_id, c.samples)
        np.testing.assert_allclose(cell.truth.values, c.q0, rtol=1e-12)


def test_same_seed_same_bytes(tmp_path):
    spec = synth.FleetSpec(seed=5, n_cells=3, cycles_per_cell=12, rpt_every=4)
    a = synth.generate(spec).write(tmp_path / "a")
    b = synth.generate(spec).write(tmp_path / "b")
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    c = synth.generate(synth.FleetSpec(seed=6, n_cells=3, cycles_per_cell=12, rpt_every=4)).write(tmp_path / "c")
    assert a[0].read_bytes() != c[0].read_bytes()


def test_round_trip_noiseless():
    spec = synth.FleetSpec(seed=9, n_cells=3, cycles_per_cell=30, rpt_every=6, noise_sigma=0.0)
    for c in synth.generate(spec).cells:
        recs = segment_cycles(c.samples)
        q_age = [cycle_q_age(r) for r in recs if r.cycle_type is CycleType.AGING]
        q_c20 = [cycle_q_c20(r) for r in recs if r.cycle_type is CycleType.C20_CAPACITY]
        np.testing.assert_allclose(q_age, c.q_age_true(c.aging_ah), rtol=1e-6)
        np.testing.assert_allclose(q_c20, c.q_true, rtol=1e-6)
        hppc = [r for r in recs if r.cycle_type is CycleType.HPPC]
        assert len(hppc) == len(q_c20)


def test_shape_and_positivity(default_fleet):
    for c in default_fleet.cells:
        assert np.all(np.diff(c.aging_ah) > 0) and np.all(np.diff(c.rpt_ah) > 0)
        assert np.all(c.q_age > 0) and np.all(c.q_c20 > 0)
        q = c.capacity(np.linspace(0, c.spec.ah_life, 201))
        peak = int(np.argmax(q))
        assert 0 < peak < 200 and q[peak] > q[0]  # rises, then falls
        lo, hi = c.spec.q0_range
        assert lo <= c.q0 <= hi


def test_group_separation(default_fleet):
    spec = default_fleet.spec
    for a in default_fleet.cells:
        for b in default_fleet.cells:
            if a.group >= b.group:
                continue
            grid = np.linspace(0, max(a.aging_ah[-1], b.aging_ah[-1]), 500)
            gap = np.min(np.abs(b.q_age_true(grid) - a.q_age_true(grid)))
            assert gap >= spec.group_separation


def test_groups_share_normalised_shape(default_fleet):
    grid = np.linspace(0, 10_000, 50)
    by_group = {}
    for c in default_fleet.cells:
        by_group.setdefault(c.group, []).append(c.capacity(grid) / c.q0)
    for curves in by_group.values():
        for curve in curves[1:]:
            np.testing.assert_allclose(curve, curves[0], rtol=1e-12)


def test_ground_truth_csv(tmp_path, small_fleet):
    small_fleet.write(tmp_path)
    lines = (tmp_path / "ground_truth.csv").read_text().splitlines()
    assert lines[0] == "cell_id,ah,q_true,group_label"
    assert len(lines) == 1 + sum(len(c.rpt_ah) for c in small_fleet.cells)
    assert {line.split(",")[3] for line in lines[1:]} == {"1", "2"}


@pytest.mark.parametrize(
    "kw",
    [dict(n_cells=1), dict(n_groups=0), dict(n_groups=5, n_cells=4), dict(noise_sigma=-0.1),
     dict(group_separation=-1.0), dict(q0_range=(34.0, 30.0)), dict(cycles_per_cell=0),
     dict(fade_rate=1e-3)],
)
def test_invalid_specs(kw):
    with pytest.raises(InvalidSpec):
        synth.generate(synth.FleetSpec(cycles_per_cell=kw.pop("cycles_per_cell", 20), **kw))
