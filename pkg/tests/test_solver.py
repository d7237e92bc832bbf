from __future__ import annotations

import math

import numpy as np
import pytest

from ricci_patterns.complex import build_quotient, classify, decompose
from ricci_patterns.complex.decomposition import FULL
from ricci_patterns.errors import NoConvergence, PreconditionError
from ricci_patterns.geometry import (Geometry, LimitCurvature, coordinates, curvature)
from ricci_patterns.solver import (SolveOptions, assemble_rstar, newton, solve_circle_pattern,
                                   solve_limit_metric)

from conftest import CRITICAL_FIXTURES

E, H = Geometry.EUCLIDEAN, Geometry.HYPERBOLIC


def test_minimal_torus_normalizes_to_one(fixtures):
    res = solve_circle_pattern(E, fixtures("minimal_torus"))
    np.testing.assert_array_equal(res.r, [1.0])
    assert res.residual < 1e-11


def test_remark_quotient_metric_is_one(fixtures):
    T = fixtures("remark_torus")
    Q = build_quotient(T, decompose(T))
    np.testing.assert_allclose(solve_circle_pattern(E, Q).r, [1.0])


def test_symmetric_genus_two_is_uniform(fixtures):
    T = fixtures("genus2_fan")
    res = solve_circle_pattern(H, T)
    assert res.residual < 1e-11
    np.testing.assert_allclose(curvature(H, T, res.r), 0, atol=1e-11)


@pytest.mark.parametrize("name", ["grid_torus", "genus2_subcritical"])
def test_circle_pattern_metric(name, fixtures):
    T = fixtures(name)
    g = Geometry.of(T)
    res = solve_circle_pattern(g, T)
    assert np.max(np.abs(curvature(g, T, res.r))) < 1e-11
    if g is E:
        assert abs(np.log(res.r).sum()) < 1e-12


@pytest.mark.parametrize("name", ["grid_torus", "genus2_subcritical"])
def test_circle_pattern_metric_is_unique(name, fixtures):
    T = fixtures(name)
    g = Geometry.of(T)
    ref = solve_circle_pattern(g, T).r
    rng = np.random.default_rng(13)
    for _ in range(10):
        x0 = coordinates(g, np.exp(rng.normal(scale=0.8, size=T.n_vertices)))
        np.testing.assert_allclose(solve_circle_pattern(g, T, x0=x0).r, ref, rtol=1e-8)


@pytest.mark.parametrize("name", ["remark_torus", "supercritical_torus", "genus2_critical"])
def test_circle_pattern_refused_unless_subcritical(name, fixtures):
    with pytest.raises(PreconditionError):
        solve_circle_pattern(Geometry.of(fixtures(name)), fixtures(name))


def test_remark_limit_metric(fixtures):
    T = fixtures("remark_torus")
    res = solve_limit_metric(T, decompose(T), "Z#1")
    np.testing.assert_array_equal(res.r, [1.0])


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_limit_metrics(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    opts = SolveOptions()
    for el in dec.critical:
        K = LimitCurvature(T, dec, el.label)
        res = solve_limit_metric(T, dec, el.label, opts, K=K)
        vals = K(res.r)
        assert np.max(np.abs(vals)) < opts.tol
        assert abs(vals.sum()) < 1e-10
        assert abs(np.log(res.r).sum()) < 1e-12


def test_limit_metric_from_many_starts(fixtures):
    T = fixtures("nested_torus")
    dec = decompose(T)
    label = dec.label_of(T.resolve(["y", "z1", "z2"]))
    ref = solve_limit_metric(T, dec, label).r
    rng = np.random.default_rng(14)
    for _ in range(50):
        x0 = rng.normal(scale=1.0, size=len(ref))
        np.testing.assert_allclose(solve_limit_metric(T, dec, label, x0=x0).r, ref, atol=1e-8)


def test_remark_rstar_is_all_ones(rstars):
    dec, rs = rstars("remark_torus")
    assert rs.as_dict() == {"v2": 1.0, "v1": 1.0}


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_rstar_blocks(name, rstars, fixtures):
    T = fixtures(name)
    dec, rs = rstars(name)
    assert set(rs.blocks) == {FULL} | {el.label for el in dec.critical}
    covered = sorted(v for b in rs.blocks.values() for v in b.vertices)
    assert covered == list(range(T.n_vertices))
    for label, b in rs.blocks.items():
        assert b.residual < 1e-11
        if label != FULL or Geometry.of(T) is E:
            assert abs(np.log(b.r).sum()) < 1e-12
    doc = rs.to_json()
    assert set(doc["rstar"]) == set(T.vertices)
    assert all(blk["residual"] < 1e-11 for blk in doc["blocks"])


def test_newton_reports_failure():
    F = lambda x: x ** 2 + 1.0   # no real root
    with pytest.raises(NoConvergence) as info:
        newton(F, np.array([0.5]), SolveOptions(max_iter=20), centred=False)
    assert info.value.residual >= 1.0
    assert info.value.best is not None


def test_newton_solves_a_smooth_system():
    F = lambda x: np.array([x[0] ** 3 - 8.0, math.exp(x[1]) - 2.0])
    x, res, it = newton(F, np.array([1.0, 0.0]), SolveOptions(), centred=False)
    np.testing.assert_allclose(x, [2.0, math.log(2)], rtol=1e-10)
    assert res < 1e-11


def test_solver_options_are_validated():
    with pytest.raises(ValueError):
        SolveOptions(tol=0)
    with pytest.raises(ValueError):
        SolveOptions(backtrack=1.5)
