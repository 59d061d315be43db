import numpy as np
import pytest

from dirac_bootstrap.fields import RealGrid
from dirac_bootstrap.lattice import LatticeBasis, build_index_set
from dirac_bootstrap.nonlinearity import NonlinearityModel
from dirac_bootstrap.problem import build_problem


@pytest.fixture(scope="session")
def lattice():
    return LatticeBasis()


@pytest.fixture(scope="session")
def index_set():
    return build_index_set(4)


@pytest.fixture(scope="session")
def grid(index_set, lattice):
    return RealGrid.for_index_set(index_set, lattice)


@pytest.fixture(scope="session")
def problem():
    return build_problem(cutoff=6, epsilon_V=0.5)


@pytest.fixture(scope="session")
def small_problem():
    return build_problem(cutoff=4, epsilon_V=0.5)


@pytest.fixture(scope="session")
def saturable_problem():
    return build_problem(cutoff=6, epsilon_V=0.5, model=NonlinearityModel.saturable(1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_coeffs(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])
