import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hardyopt.calculus import RadialFunction
from hardyopt.domain import ProblemParams, RadialDomain

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def power(s: float, scale: float = 1.0) -> RadialFunction:
    """``scale * r^s`` with exact derivatives."""
    return RadialFunction(lambda r: scale * np.asarray(r, dtype=float) ** s,
                          lambda r: scale * s * np.asarray(r, dtype=float) ** (s - 1.0),
                          lambda r: scale * s * (s - 1.0) * np.asarray(r, dtype=float) ** (s - 2.0))


@pytest.fixture
def space():
    return RadialDomain.punctured_space()


@pytest.fixture
def ball():
    return RadialDomain.punctured_ball(1.0)


@pytest.fixture
def radii():
    return np.geomspace(1e-3, 1e3, 100)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


P23 = ProblemParams(2.0, 3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
