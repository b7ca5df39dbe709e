import numpy as np
import pytest

from phibvp import Homeomorphism, ProblemSpec
from phibvp.function_space import C1GridFunction, Grid, integrate_H

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def const(value):
    return lambda t, *rest: value + 0.0 * np.asarray(t)


def random_c1(rng, grid, scale=1.0):
    """Random smooth C^1 grid function with consistent value/derivative tracks."""
    t = grid.nodes
    k = np.arange(1, 5)
    a = rng.normal(size=4) * scale / k
    ph = rng.uniform(0, 2 * np.pi, size=4)
    du = rng.normal() * scale + np.sum(a[:, None] * np.sin(k[:, None] * t[None, :] + ph[:, None]), axis=0)
    return C1GridFunction(grid, rng.normal() * scale + integrate_H(grid, du), du)


@pytest.fixture
def cubic():
    return Homeomorphism.p_laplacian(4)


@pytest.fixture
def example_spec(cubic):
    return ProblemSpec(cubic, 1.0, 1.0, lambda t, x, y: np.exp(y) / 2 - 1, c=const(-1.0), M1=-1.0, M2=1.0)


@pytest.fixture
def linear_spec():
    return ProblemSpec(Homeomorphism.identity(), -1.0, 1.0, lambda t, x, y: 2.0 + 0 * t, h=const(2.0),
                       M1=-2.0, M2=0.0)


@pytest.fixture
def grid512():
    return Grid(1.0, 512)


def linear_solution(grid):
    t = grid.nodes
    return C1GridFunction(grid, -1 - t + t * t, -1 + 2 * t)
