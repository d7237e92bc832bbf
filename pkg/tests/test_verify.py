from __future__ import annotations

import numpy as np
import pytest

from ricci_patterns.complex import connected_subsets, decompose, phi
from ricci_patterns.geometry import Geometry
from ricci_patterns.verify import (THREADS_ENV, oracle_curvature, oracle_degenerate_curve,
                                   oracle_fd_symmetry, oracle_phi, run_battery, thread_count)

from conftest import ALL_FIXTURES, random_radii

E, H = Geometry.EUCLIDEAN, Geometry.HYPERBOLIC


def test_oracle_phi_on_remark(fixtures):
    T = fixtures("remark_torus")
    for U in connected_subsets(T):
        assert oracle_phi(T, U) == pytest.approx(phi(T, U), abs=1e-12)
    assert abs(oracle_phi(T, ["v1"])) < 1e-12


def test_oracle_phi_whole_minimal_torus(fixtures):
    assert oracle_phi(fixtures("minimal_torus"), ["v"]) == 0.0


def test_oracle_phi_agrees_on_500_subsets(fixtures):
    rng = np.random.default_rng(15)
    worst, count = 0.0, 0
    for name in ("grid_torus", "nested_torus", "genus2_subcritical", "genus2_critical"):
        T = fixtures(name)
        subsets = list(connected_subsets(T))
        for k in rng.choice(len(subsets), size=125, replace=len(subsets) < 125):
            worst = max(worst, abs(oracle_phi(T, subsets[k]) - phi(T, subsets[k])))
            count += 1
    assert count == 500
    assert worst < 1e-12


@pytest.mark.parametrize("name,g", [("grid_torus", E), ("genus2_subcritical", H)])
def test_fd_symmetry_oracle(name, g, fixtures):
    T = fixtures(name)
    rep = oracle_fd_symmetry(g, T, np.ones(T.n_vertices), seed=3, samples=5)
    assert rep.passed
    assert rep.checks["diagonal_negative"].max_deviation < 0
    assert rep.checks["offdiagonal_positive"].max_deviation > 0


def test_oracle_curvature_matches_on_random_metrics(fixtures):
    from ricci_patterns.geometry import curvature
    rng = np.random.default_rng(16)
    for name in ("remark_torus", "genus2_critical"):
        T = fixtures(name)
        g = Geometry.of(T)
        r = random_radii(rng, T.n_vertices)
        np.testing.assert_allclose(curvature(g, T, r), oracle_curvature(g, T, r), atol=1e-9)


@pytest.mark.parametrize("name", ["remark_torus", "genus2_critical", "nested_torus"])
def test_degenerate_curve(name, rstars, fixtures):
    dec, rs = rstars(name)
    rep = oracle_degenerate_curve(fixtures(name), dec, rs)
    assert rep.passed, rep.to_json()


def test_degenerate_curve_with_perturbed_rstar(rstars, fixtures):
    T = fixtures("nested_torus")
    dec, rs = rstars("nested_torus")
    bad = rs.vector.copy()
    bad[T.vertex_index["z1"]] *= 1.2
    rep = oracle_degenerate_curve(T, dec, bad)
    assert not rep.checks["limit_values_vanish"].passed


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_battery_passes(name, fixtures):
    rep = run_battery(fixtures(name), seed=0)
    assert rep.passed, {k: v.to_json() for k, v in rep.checks.items() if not v.passed}


def test_battery_is_deterministic_across_thread_counts(fixtures):
    T = fixtures("chain_torus")
    a = run_battery(T, seed=4, threads=1).to_json()
    b = run_battery(T, seed=4, threads=4).to_json()
    assert a == b


def test_thread_count(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    monkeypatch.setenv(THREADS_ENV, "many")
    assert thread_count() == 1
    monkeypatch.delenv(THREADS_ENV)
    assert thread_count() == 1
