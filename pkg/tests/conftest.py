import pytest

from levicool.material import Ellipsoid
from levicool.optics import Beam
from levicool.rates import characterize


@pytest.fixture(scope="session")
def beam():
    return Beam(1064e-9, 0.07, 0.9)


@pytest.fixture(scope="session")
def diamond_48_53(beam):
    return characterize(Ellipsoid.from_nm(48, 53), beam)


@pytest.fixture(scope="session")
def diamond_15_70(beam):
    return characterize(Ellipsoid.from_nm(15, 70), beam)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def _report(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
