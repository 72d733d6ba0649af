import numpy as np
import pytest

from capax import GaussianAdditiveSpec, RayleighSpec, gaussian_channel, rayleigh_channel, solve_capacity
from capax.infodens import DiscreteInput


@pytest.fixture(scope="session")
def gauss():
    return gaussian_channel(GaussianAdditiveSpec(1.0), 1.0)


@pytest.fixture(scope="session")
def rayleigh():
    return rayleigh_channel(RayleighSpec(1.0))


@pytest.fixture(scope="session")
def gauss_solution(gauss):
    return solve_capacity(gauss)


@pytest.fixture(scope="session")
def rayleigh_solution(rayleigh):
    return solve_capacity(rayleigh)


def random_input(rng, A, max_atoms=4):
    """1 to max_atoms atoms uniform on [-A, A], Dirichlet(1) masses."""
    n = int(rng.integers(1, max_atoms + 1))
    return DiscreteInput.from_points(rng.uniform(-A, A, n), rng.dirichlet(np.ones(n)), A)


# one verdict line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
