import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# acceptance lines: nodeid -> (label, detail dict); outcomes filled by the report hook
_CRITERIA = {}
_OUTCOMES = {}


@pytest.fixture
def criterion(request):
    """Register the running test as an acceptance criterion; returns a dict for details."""
    marker = request.node.get_closest_marker("criterion")
    label = marker.args[0] if marker else request.node.name
    detail = {}
    _CRITERIA[request.node.nodeid] = (label, detail)
    return detail


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion label")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        if hasattr(rep, "wasxfail"):
            _OUTCOMES[item.nodeid] = "XFAIL (expected)" if rep.skipped else "XPASS (unexpected)"
        else:
            _OUTCOMES[item.nodeid] = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (label, detail) in sorted(_CRITERIA.items(), key=lambda kv: kv[1][0]):
        extra = ", ".join(f"{k}={v}" for k, v in detail.items())
        terminalreporter.write_line(f"{label}: {_OUTCOMES.get(nodeid, '?')}  {extra}".rstrip())
