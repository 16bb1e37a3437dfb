import math

import pytest

from voipcac.config import SessionTrafficParams, ScenarioConfig, CapacityParams, default_scenario
from voipcac.packet import DropCache


def erlang_b(N: int, a: float) -> float:
    """Erlang B by the standard recursion B(n) = aB(n-1) / (n + aB(n-1))."""
    b = 1.0
    for n in range(1, N + 1):
        b = a * b / (n + a * b)
    return b


def mm1k_loss(rho: float, K: int) -> float:
    """Probability an arrival finds an M/M/1/K system full."""
    if math.isclose(rho, 1.0):
        return 1.0 / (K + 1)
    return (1.0 - rho) * rho**K / (1.0 - rho ** (K + 1))


def single_class(N: int, load: float, mu: float = 0.01) -> ScenarioConfig:
    traffic = SessionTrafficParams(load * mu, 0.0, 0.0, mu, mu, mu)
    return ScenarioConfig(traffic=traffic, capacity=CapacityParams(max_sessions=N))


@pytest.fixture(scope="session")
def drop_cache() -> DropCache:
    # drop values do not depend on traffic, so one cache serves every test
    return DropCache()


@pytest.fixture(scope="session")
def headline():
    return default_scenario(0.45, 0.5, 0.8)


# one status line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
