import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fsprivacy import Box, QuadraticCost, complete_graph, path_graph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def three_costs():
    """x^2 + x, x^2 + 2x, x^2 + 3x."""
    return [QuadraticCost([[2.0]], [a]) for a in (1.0, 2.0, 3.0)]


@pytest.fixture
def wide_box():
    return Box([-100.0], [100.0])


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
