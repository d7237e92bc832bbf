from __future__ import annotations

import math

import numpy as np
import pytest

from ricci_patterns.fixtures import BUILDERS, fixture

EUCLIDEAN_FIXTURES = ["minimal_torus", "remark_torus", "supercritical_torus", "chain_torus",
                      "grid_torus", "nested_torus"]
HYPERBOLIC_FIXTURES = ["genus2_fan", "genus2_subcritical", "genus2_critical"]
CRITICAL_FIXTURES = ["remark_torus", "chain_torus", "nested_torus", "genus2_critical"]
ALL_FIXTURES = list(BUILDERS)


@pytest.fixture(scope="session")
def fixtures():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = fixture(name)
        return cache[name]
    return get


def random_radii(rng: np.random.Generator, n: int, scale: float = 0.7) -> np.ndarray:
    return np.exp(rng.normal(scale=scale, size=n))


def law_of_cosines_angle(a: float, b: float, c: float) -> float:
    """Euclidean angle opposite side a."""
    return math.acos((b * b + c * c - a * a) / (2 * b * c))


@pytest.fixture(scope="session")
def long_traces(fixtures):
    """Flow from all-ones radii up to t = 1e4, cached per fixture."""
    from ricci_patterns.flow import FlowOptions, integrate
    from ricci_patterns.geometry import Geometry
    cache = {}

    def get(name):
        if name not in cache:
            T = fixtures(name)
            cache[name] = integrate(Geometry.of(T), T, None, FlowOptions(t_max=1e4))
        return cache[name]
    return get


@pytest.fixture(scope="session")
def rstars(fixtures):
    from ricci_patterns.complex import decompose
    from ricci_patterns.solver import assemble_rstar
    cache = {}

    def get(name):
        if name not in cache:
            T = fixtures(name)
            dec = decompose(T)
            cache[name] = (dec, assemble_rstar(T, dec))
        return cache[name]
    return get


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
