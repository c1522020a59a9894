import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from densityflow.grid import PeriodicGrid

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def circle():
    return PeriodicGrid.circle(128)


@pytest.fixture(scope="session")
def small_circle():
    return PeriodicGrid.circle(32)


@pytest.fixture(scope="session")
def conformal_circle():
    return PeriodicGrid.circle(64, conformal=lambda x: 0.3 * np.sin(x))


@pytest.fixture(scope="session")
def torus():
    return PeriodicGrid.torus(32)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
