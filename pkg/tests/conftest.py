import numpy as np
import pytest
from hypothesis import settings

from alphamod.groups import builtin
from alphamod.lattice import default_lattice
from alphamod.quasinorm import QuasiNorm

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def H():
    return builtin("heisenberg(1)")


@pytest.fixture(scope="session")
def nH(H):
    return QuasiNorm(H)


@pytest.fixture(scope="session")
def NH(H):
    return default_lattice(H)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n].line())
