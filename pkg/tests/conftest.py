from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

_criteria: dict[str, tuple[str, str]] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _criteria.get(name, ("passed", ""))
        outcome = report.outcome if prev[0] == "passed" else prev[0]
        _criteria[name] = (outcome, report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    def key(name):
        return int(name.split("_")[2])
    for name in sorted(_criteria, key=key):
        outcome, _ = _criteria[name]
        number = key(name)
        label = " ".join(name.split("_")[3:])
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {label}")
