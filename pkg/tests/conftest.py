import os

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call":
        ok = rep.passed
    elif rep.failed:
        ok = False
    else:
        return
    prev = _RESULTS.get(n, (title, True))[1]
    _RESULTS[n] = (title, prev and ok)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, ok = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def backend():
    return os.environ.get("MANEUVER_PLANNER_BACKEND", "numba")
