import numpy as np
import pytest

from pressure_lab.pressure import CocycleSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture
def moran():
    return CocycleSpec.full_shift([[[0.5]], [[1 / 3]]])


@pytest.fixture
def diagonal3():
    return CocycleSpec.full_shift([np.diag([0.5, 0.25])] * 3)


@pytest.fixture
def golden():
    return CocycleSpec.full_shift([[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
