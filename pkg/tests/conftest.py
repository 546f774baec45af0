import numpy as np
import pytest

from ndfwm.master_equation import TransitionSpec


@pytest.fixture
def spec01():
    return TransitionSpec.from_values(0, 1, 0.01)


@pytest.fixture
def spec12():
    return TransitionSpec.from_values(1, 2, 0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
