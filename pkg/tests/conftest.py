import numpy as np
import pytest

from popreplace.dynamics import (CarryingCapacity, WolbachiaParams, build_separated_model,
                                 build_wolbachia_model, separated_from_wolbachia)
from popreplace.optimize import cost_curve
from popreplace.periodic import find_periodic_envelope
from popreplace.release import build_cost_potential

T = 12.0
THETA_D = 0.2 / 0.72          # (b1 - b2) / (sh b1) at the reference parameters
THETA = (1 - 0.27 * 0.6 / (0.3 * 0.8)) / 0.9


@pytest.fixture(scope="session")
def params():
    return WolbachiaParams()


@pytest.fixture(scope="session")
def K():
    return CarryingCapacity.cosine(0.06, 0.02, T)


@pytest.fixture(scope="session")
def model(params, K):
    return build_wolbachia_model(params, K)


@pytest.fixture(scope="session")
def sep_model():
    K = CarryingCapacity.cosine(0.06, 0.02, T)
    q = WolbachiaParams(d1=0.3)
    return build_separated_model(separated_from_wolbachia(q, K), K)


@pytest.fixture(scope="session")
def flat_model(params):
    return build_wolbachia_model(params, CarryingCapacity.cosine(0.06, 0.0, T))


@pytest.fixture(scope="session")
def env(model):
    return find_periodic_envelope(model, grid_n=256, tol=1e-11)


@pytest.fixture(scope="session")
def sep_env(sep_model):
    return find_periodic_envelope(sep_model, grid_n=256, tol=1e-11)


@pytest.fixture(scope="session")
def pot(model):
    return build_cost_potential(model)


@pytest.fixture(scope="session")
def sep_pot(sep_model):
    return build_cost_potential(sep_model)


@pytest.fixture(scope="session")
def curve(model, env, pot):
    return cost_curve(model, env, pot, grid_n=256)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
