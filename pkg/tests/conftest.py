import re

import numpy as np
import pytest

_ACCEPTANCE = re.compile(r"test_acceptance\.py::test_c(\d+)([a-z]?)_(\w+)")
_RESULTS: dict[str, tuple[str, str]] = {}
_NOTES: dict[str, str] = {}


def _key(nodeid):
    m = _ACCEPTANCE.search(nodeid)
    if not m:
        return None, None
    return f"{int(m.group(1))}{m.group(2)}", m.group(3).replace("_", " ")


def pytest_runtest_logreport(report):
    key, name = _key(report.nodeid)
    if key is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        state = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _RESULTS[key] = (state, name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = sorted(_RESULTS, key=lambda k: (int(re.match(r"\d+", k).group()), k))
    for key in order:
        state, name = _RESULTS[key]
        line = f"criterion {key:<3} {state}  {name}"
        if key in _NOTES:
            line += f"  [{_NOTES[key]}]"
        terminalreporter.write_line(line)


@pytest.fixture
def note(request):
    """Attach a short measured-value summary to this criterion's report line."""
    key, _ = _key(request.node.nodeid)

    def write(text):
        _NOTES[key] = text
        print(f"criterion {key}: {text}")

    return write


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
