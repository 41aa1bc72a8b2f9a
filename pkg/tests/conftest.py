import numpy as np
import pytest

from sparsecount import make_gdp, make_tpbn
from sparsecount.priors import GaussHypergeometricPrior


@pytest.fixture(scope="session")
def tpbn():
    return make_tpbn(1.5, 1.5)


@pytest.fixture(scope="session")
def horseshoe_gh():
    return GaussHypergeometricPrior(0.5, 0.5, 1.0)


@pytest.fixture(scope="session")
def gdp31():
    return make_gdp(3.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
