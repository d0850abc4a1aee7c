import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fracsobolev import DomainMask, Grid, bump
from fracsobolev.experiments import default_envelope

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid64():
    return Grid(1, 2.0, 64)


@pytest.fixture(scope="session")
def grid32():
    return Grid(1, 2.0, 32)


@pytest.fixture(scope="session")
def mask32(grid32):
    return DomainMask.interval(grid32, -1.0, 1.0)


@pytest.fixture(scope="session")
def mask64(grid64):
    return DomainMask.interval(grid64, -1.0, 1.0)


@pytest.fixture(scope="session")
def sweep_setup():
    """Calibrated experiment configuration: L = pi, M = 256, Omega = (-1.5, 1.5)."""
    g = Grid(1, np.pi, 256)
    m = DomainMask.interval(g, -1.5, 1.5)
    return {"grid": g, "mask": m, "base": bump(g, 0.0, 1.0, 0.5),
            "envelope": default_envelope(m), "f": g.zeros(), "amplitude": 3.0}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
