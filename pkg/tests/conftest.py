import pytest

from bvlimits.generators import example1
from bvlimits.spectral import StationaryMeasure, perron
from bvlimits.diagram import incidence

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def ex1():
    return example1()


@pytest.fixture(scope="session")
def ex1_pd(ex1):
    return perron(incidence(ex1, 2))


@pytest.fixture(scope="session")
def ex1_mu(ex1):
    return StationaryMeasure(ex1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
