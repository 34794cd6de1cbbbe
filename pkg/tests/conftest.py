import numpy as np
import pytest

from loccusd.states import BELL_STATES, KET0, KET1, StateEnsemble

_criteria = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bell4():
    return StateEnsemble.from_vectors(BELL_STATES, (2, 2))


@pytest.fixture
def three_bell():
    return StateEnsemble.from_vectors(BELL_STATES[:3], (2, 2))


@pytest.fixture
def product_basis():
    kets = [np.kron(a, b) for a in (KET0, KET1) for b in (KET0, KET1)]
    return StateEnsemble.from_vectors(kets, (2, 2))


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or report.outcome != "passed":
        passed = report.outcome == "passed"
        prev = _criteria.get(number, (title, True))[1]
        _criteria[number] = (title, prev and passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None and mark.args:
        report.criterion = tuple(mark.args[:2])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
