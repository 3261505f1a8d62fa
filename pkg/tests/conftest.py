import pytest

from cavlab.models import radial_model, fluid_model
from cavlab.radial import RadialGrid, minimize_classical


@pytest.fixture(scope="session")
def model():
    return radial_model()


@pytest.fixture(scope="session")
def fluid():
    return fluid_model()


@pytest.fixture(scope="session")
def grid100():
    return RadialGrid(100)


@pytest.fixture(scope="session")
def classical(model, grid100):
    """Cavitating minimizer at lam = 1.5, m = 100 (shared, ~1 s)."""
    return minimize_classical(1.5, model, grid100)


# acceptance lines, filled by tests/test_acceptance.py and printed at the end
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0].rstrip("."))):
        terminalreporter.write_line(line)
