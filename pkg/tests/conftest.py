import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from peakonlab.exact import derive_params
from peakonlab.solver import ExactPeakonAntipeakon, Multipeakon

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

P0, Q0 = 2.0, math.log(0.75)


@pytest.fixture(scope="session")
def params():
    return derive_params(P0, Q0)


@pytest.fixture(scope="session")
def pair_handle(params):
    return ExactPeakonAntipeakon(P0, Q0, 2 * params.t_collision)


@pytest.fixture(scope="session")
def pair_ode(params):
    return Multipeakon([Q0 / 2, -Q0 / 2], [P0 / 2, -P0 / 2], 2 * params.t_collision)


@pytest.fixture(scope="session")
def peakon_handle():
    return Multipeakon([0.0], [1.0], 2.0)


@pytest.fixture(scope="session")
def zero():
    return Multipeakon([], [], 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    from tests.acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
