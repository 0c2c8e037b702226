import numpy as np
import pytest

from hyperturb import kernels
from hyperturb.model import ModelParams


@pytest.fixture(params=kernels.available())
def backend(request):
    """Run the test once per available kernel backend."""
    prev = kernels.use(request.param)
    yield request.param
    kernels.use(prev)


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
