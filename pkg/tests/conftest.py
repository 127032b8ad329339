import numpy as np
import pytest

from bogoliubov_qbe.collision import RadialGrid, build_kernel_table
from bogoliubov_qbe.dispersion import DispersionParams


@pytest.fixture(scope="session")
def params():
    return DispersionParams()


@pytest.fixture(scope="session")
def grid64():
    return RadialGrid.uniform(64, 8.0)


@pytest.fixture(scope="session")
def table64(grid64):
    return build_kernel_table(grid64)


@pytest.fixture(scope="session")
def grid512():
    return RadialGrid.uniform(512, 8.0)


@pytest.fixture(scope="session")
def table512(grid512):
    return build_kernel_table(grid512)


def bisect_inverse(fun, target, lo, hi, iters=200):
    """Plain bisection for an increasing function; independent of any closed form."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fun(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
