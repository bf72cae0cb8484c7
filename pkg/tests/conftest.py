import numpy as np
import pytest

from slideopt.reference import reference_optimum
from slideopt.zoo import desk_problem


def _certified(name):
    prob = desk_problem(name)
    reference_optimum(prob, tol=1e-10)
    return prob


@pytest.fixture(scope="session")
def desk():
    return _certified("desk_quad_l1")


@pytest.fixture(scope="session")
def desk_noisy():
    return _certified("desk_quad_l1_noisy")


@pytest.fixture(scope="session")
def desk_strong():
    return _certified("desk_strong_quad_l1")


@pytest.fixture(scope="session")
def desk_saddle():
    return _certified("desk_saddle_linf")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the terminal summary, then assert on it."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
