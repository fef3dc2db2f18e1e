import math

import pytest

from cogarch_symbol import AtomicMeasure, CogarchParams, LevyTriplet, StatePoint


def brownian_params(beta=1.0, delta=0.5, lam=0.25, drift=0.0):
    return CogarchParams(beta, delta, lam, LevyTriplet(drift, 1.0))


def atom_params(size=0.5, rate=2.0, beta=1.0, delta=0.5, lam=0.25):
    return CogarchParams(beta, delta, lam, LevyTriplet(0.0, 0.0, AtomicMeasure(((size, rate),))))


def quiet_params(beta=1.0, delta=math.exp(-1.0), lam=0.0):
    return CogarchParams(beta, delta, lam, LevyTriplet())


@pytest.fixture
def brownian():
    return brownian_params()


@pytest.fixture
def atom():
    return atom_params()


@pytest.fixture
def quiet():
    return quiet_params()


@pytest.fixture
def origin():
    return StatePoint(0.0, 0.0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
