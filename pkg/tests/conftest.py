import numpy as np
import pytest

from rfibench.dyncore import DynamicsParams


def make_params(n=2, **kw) -> DynamicsParams:
    base = dict(
        link_masses=np.ones(n), link_lengths=np.ones(n), joint_damping=np.zeros(n),
        joint_dry_friction=np.zeros(n), joint_armature=np.zeros(n),
        controller_gains=np.tile([2.0, 0.0, 0.0], (n, 1)),
    )
    base.update(kw)
    return DynamicsParams(**base)


@pytest.fixture
def params2():
    return make_params(2)


@pytest.fixture(scope="session")
def reach_cfg():
    from rfibench.config import load_config

    return load_config("reach")


@pytest.fixture(scope="session")
def push_cfg():
    from rfibench.config import load_config

    return load_config("push")


@pytest.fixture(scope="session")
def slide_cfg():
    from rfibench.config import load_config

    return load_config("slide")


_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    n = mark.args[0]
    entry = _CRITERIA.setdefault(n, {"ok": True, "details": []})
    entry["ok"] = entry["ok"] and rep.passed
    for key, value in item.user_properties:
        if key == "detail":
            entry["details"].append(str(value))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(dict.fromkeys(e["details"]))
        terminalreporter.write_line(f"criterion {n:>2}: {status}" + (f"  {detail}" if detail else ""))
