import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA[item.nodeid] = {"n": mark.args[0], "title": mark.args[1], "values": {}}


@pytest.fixture
def measured(request):
    """Dict for values a criterion test wants shown in the summary."""
    return _CRITERIA[request.node.nodeid]["values"]


def pytest_runtest_logreport(report):
    entry = _CRITERIA.get(report.nodeid)
    if entry is None:
        return
    if report.failed:
        entry["outcome"] = "FAIL"
    elif report.skipped:
        entry.setdefault("outcome", "SKIP")
    elif report.when == "call":
        entry.setdefault("outcome", "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for entry in sorted(_CRITERIA.values(), key=lambda e: e["n"]):
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in entry["values"].items())
        tr.write_line(f"criterion {entry['n']:>2}: {entry.get('outcome', 'NOT RUN'):<7} "
                      f"{entry['title']}" + (f"  [{shown}]" if shown else ""))


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start


@pytest.fixture
def stopwatch():
    return Stopwatch()
