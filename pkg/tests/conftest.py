import numpy as np
import pytest

from slsoh import synth
from slsoh.harness import load_dataset
from slsoh.trajectory import Samples

SMALL = synth.FleetSpec(seed=11, n_cells=4, n_groups=2, cycles_per_cell=40, rpt_every=5)


@pytest.fixture(scope="session")
def small_fleet():
    return synth.generate(SMALL)


@pytest.fixture(scope="session")
def small_dataset(small_fleet):
    return load_dataset(small_fleet.streams())


@pytest.fixture(scope="session")
def default_fleet():
    return synth.generate(synth.FleetSpec())


@pytest.fixture(scope="session")
def default_dataset(default_fleet):
    return load_dataset(default_fleet.streams())


def block(t0, charge_a, charge_s, discharge_a, discharge_s, rest_s=1200.0, ramp=60.0, v=3.7, temp=25.0):
    """Rest, ramped charge plateau, ramped discharge plateau, rest; times from t0."""
    t = [t0, t0 + ramp, t0 + ramp + charge_s, t0 + 2 * ramp + charge_s]
    i = [0.0, charge_a, charge_a, 0.0]
    t1 = t[-1]
    t += [t1 + ramp, t1 + ramp + discharge_s, t1 + 2 * ramp + discharge_s]
    i += [-discharge_a, -discharge_a, 0.0]
    t.append(t[-1] + rest_s)
    i.append(0.0)
    return t, i


def stream(blocks, v=3.7, temp=25.0):
    """Concatenate ``block`` outputs (dropping the shared boundary sample)."""
    t, i = [], []
    for bt, bi in blocks:
        if t:
            bt, bi = bt[1:], bi[1:]
        t += bt
        i += bi
    t = np.array(t)
    return Samples(t, i, np.full(len(t), v), np.full(len(t), temp))


# one summary line per acceptance criterion, printed after the run
_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed")):
        return
    number, title = mark.args
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
    detail = "; ".join(str(v) for k, v in rep.user_properties if k == "detail")
    _CRITERIA[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        line = f"criterion {number:>2}: {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
