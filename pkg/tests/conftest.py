import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from symplength import FlatTorus, RoundSphere, load_model

settings.register_profile(
    "numeric", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("numeric")

SCALED_RADIUS = 1.0 / (2.0 * math.pi)  # diameter 1/2


@pytest.fixture(scope="session")
def torus():
    return FlatTorus([1.0, 1.0])


@pytest.fixture(scope="session")
def sphere():
    return RoundSphere(2, SCALED_RADIUS)


@pytest.fixture(scope="session")
def unit_sphere():
    return RoundSphere(2, 1.0)


@pytest.fixture(scope="session")
def revolution():
    return load_model({"kind": "surface-of-revolution", "profile": "2+cos(z)", "inj_bound": 1.0})


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
