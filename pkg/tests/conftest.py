import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from proxbr import NormedSpace

settings.register_profile("proxbr", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("proxbr")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def line():
    return NormedSpace(1, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
