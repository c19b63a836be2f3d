import numpy as np
import pytest

from eigenrate import GameRecord, aggregate


@pytest.fixture
def two_player():
    """s_AB = 2, s_BA = 1."""
    return aggregate([GameRecord("A", "B", 1.0), GameRecord("A", "B", 1.0), GameRecord("B", "A", 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20100)


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1].removeprefix("test_")
        detail = dict(report.user_properties).get("detail", "")
        _acceptance.append((name, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _acceptance:
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{verdict}  {name}: {detail}")
