from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ricci_patterns.complex import (DiskTriangulation, Edge, build_disk, connected_subsets,
                                    decompose, phi)
from ricci_patterns.complex.triangulation import from_document
from ricci_patterns.errors import DomainError, StepError
from ricci_patterns.fixtures import minimal_torus_doc, remark_torus_doc
from ricci_patterns.geometry import (Geometry, LimitCurvature, coordinates, corner_angle,
                                     curvature, curvature_disk, curvature_jacobian, edge_length,
                                     face_angles,
                                     fd_jacobian, inverse, limit_angle, limit_curvature_KZ,
                                     limit_jacobian, limit_length, phi_Z, triangle_angles)
from ricci_patterns.verify import oracle_triangle

from conftest import CRITICAL_FIXTURES, EUCLIDEAN_FIXTURES, HYPERBOLIC_FIXTURES, random_radii

PI = math.pi
E, H = Geometry.EUCLIDEAN, Geometry.HYPERBOLIC


def two_vertex(weight):
    """Remark torus whose spoke ``p`` (from v2 to v1) carries ``weight``."""
    return from_document(remark_torus_doc(spokes=(weight, 0.6, 1.2)))


# -- lengths and angles ------------------------------------------------------------------

def test_euclidean_right_angle_length():
    T = two_vertex(PI / 2)
    assert edge_length(E, T, "p", np.array([3.0, 4.0])) == pytest.approx(5.0, rel=1e-15)


@pytest.mark.parametrize("g", [E, H])
def test_tangent_circles_add_radii(g):
    T = two_vertex(0.0)
    assert edge_length(g, T, "p", np.array([1.0, 2.0])) == pytest.approx(3.0, rel=1e-14)


def test_hyperbolic_length_matches_cosh_law():
    T = two_vertex(1.0)
    for a, b in [(0.3, 2.0), (5.0, 7.0), (1e-4, 3e-4)]:
        want = math.acosh(math.cosh(a) * math.cosh(b) + math.sinh(a) * math.sinh(b) * math.cos(1.0))
        assert edge_length(H, T, "p", np.array([a, b])) == pytest.approx(want, rel=1e-9)


def test_hyperbolic_length_for_huge_radii_is_finite():
    T = two_vertex(PI / 2)
    ell = edge_length(H, T, "p", np.array([400.0, 500.0]))
    assert math.isfinite(ell) and ell == pytest.approx(900 + math.log(0.5), rel=1e-12)


def test_equilateral_corner_angles():
    a = triangle_angles(E, [2.0, 2.0, 2.0], [0.4, 0.4, 0.4])
    np.testing.assert_allclose(a, PI / 3, rtol=1e-14)
    np.testing.assert_allclose(triangle_angles(E, [1, 1, 1], [PI / 2] * 3), PI / 3, rtol=1e-14)
    np.testing.assert_allclose(triangle_angles(E, [1, 1, 1], [0, 0, 0]), PI / 3, rtol=1e-14)


@pytest.mark.parametrize("r", [0.1, 1.0, 4.0])
def test_hyperbolic_equilateral_angle_is_smaller(r):
    a = triangle_angles(H, [r] * 3, [0.7] * 3)
    np.testing.assert_allclose(a, oracle_triangle(H, [r] * 3, [0.7] * 3), rtol=1e-10)
    assert np.all(a < PI / 3)
    assert a.sum() < PI


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.lists(st.floats(0, PI / 2), min_size=3, max_size=3),
       st.sampled_from([E, H]))
@settings(max_examples=300, deadline=None)
def test_angles_match_law_of_cosines(logr, theta, g):
    r = np.exp(logr)
    got = triangle_angles(g, r, theta)
    np.testing.assert_allclose(got, oracle_triangle(g, r, theta), atol=1e-7)
    if g is E:
        assert got.sum() == pytest.approx(PI, abs=1e-12)
    else:
        assert got.sum() < PI


def test_corner_angle_on_surface(fixtures):
    T = fixtures("minimal_torus")
    for i in range(3):
        assert corner_angle(E, T, (0, i), np.array([1.7])) == pytest.approx(PI / 3, rel=1e-14)


def test_nearly_degenerate_triangle_stays_in_range():
    a = triangle_angles(E, [1e-9, 1.0, 1.0], [0.2, 0.3, PI / 2])
    assert np.all((a >= 0) & (a <= PI))
    assert a.sum() == pytest.approx(PI, abs=1e-12)
    assert a[0] == pytest.approx(PI - 0.2, abs=1e-6)


def test_nonpositive_radius_is_rejected(fixtures):
    with pytest.raises(DomainError):
        curvature(E, fixtures("remark_torus"), np.array([1.0, 0.0]))


# -- curvature ---------------------------------------------------------------------------

@pytest.mark.parametrize("w", [PI / 3, 0.5, 0.0, PI / 2])
def test_minimal_torus_is_flat(w):
    T = from_document(minimal_torus_doc(w))
    for r in (0.01, 1.0, 30.0):
        np.testing.assert_allclose(curvature(E, T, np.array([r])), 0.0, atol=1e-13)


@pytest.mark.parametrize("name", EUCLIDEAN_FIXTURES)
def test_euclidean_curvature_sums_to_zero_and_is_scale_free(name, fixtures):
    T = fixtures(name)
    rng = np.random.default_rng(1)
    for _ in range(20):
        r = random_radii(rng, T.n_vertices)
        K = curvature(E, T, r)
        assert abs(K.sum()) < 1e-10
        np.testing.assert_allclose(curvature(E, T, 2 * r), K, atol=1e-12)


@pytest.mark.parametrize("name", HYPERBOLIC_FIXTURES)
def test_hyperbolic_total_curvature_exceeds_euler_term(name, fixtures):
    T = fixtures(name)
    rng = np.random.default_rng(2)
    for _ in range(20):
        assert curvature(H, T, random_radii(rng, T.n_vertices)).sum() > 2 * PI * T.chi


@pytest.mark.parametrize("name", ["remark_torus", "grid_torus", "genus2_subcritical",
                                  "nested_torus"])
def test_strict_subset_bound(name, fixtures):
    T = fixtures(name)
    g = Geometry.of(T)
    rng = np.random.default_rng(3)
    subsets = [U for U in connected_subsets(T) if len(U) < T.n_vertices]
    for k in rng.choice(len(subsets), size=min(100, len(subsets)), replace=True):
        U = sorted(subsets[k])
        K = curvature(g, T, random_radii(rng, T.n_vertices, scale=1.5))
        assert K[U].sum() > phi(T, U)


@pytest.mark.parametrize("name", ["grid_torus", "remark_torus", "genus2_subcritical"])
def test_curvature_of_shrinking_subset_tends_to_phi(name, fixtures):
    T = fixtures(name)
    g = Geometry.of(T)
    rng = np.random.default_rng(4)
    for U in itertools.islice((U for U in connected_subsets(T) if len(U) < T.n_vertices), 30):
        r = random_radii(rng, T.n_vertices)
        r[sorted(U)] *= 1e-8
        assert curvature(g, T, r)[sorted(U)].sum() == pytest.approx(phi(T, U), abs=1e-5)


# -- disks -----------------------------------------------------------------------------

def test_single_triangle_disk():
    edges = (Edge("x", (0, 1), 0.3), Edge("y", (1, 2), 0.8), Edge("z", (2, 0), 1.1))
    faces = (((0, 1), (1, 1), (2, 1)),)
    D = DiskTriangulation(("a", "b", "c"), edges, faces, origin=(0, 1, 2),
                          interior=(False,) * 3, boundary=faces[0])
    K = curvature_disk(D, np.array([1.0, 2.0, 0.5]))
    assert K.sum() == pytest.approx(2 * PI, abs=1e-13)


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_disk_gauss_bonnet(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    rng = np.random.default_rng(5)
    for el in dec.critical:
        D = build_disk(T, dec, el.label)
        for _ in range(20):
            r = random_radii(rng, len(D.vertices))
            assert curvature_disk(D, r).sum() == pytest.approx(2 * PI, abs=1e-10)


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_phi_on_disk(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    for el in dec.critical:
        D = build_disk(T, dec, el.label)
        core = sorted(el.core)
        assert abs(phi_Z(D, core)) < 1e-9
        for k in range(1, len(core)):
            for U in itertools.combinations(core, k):
                assert phi_Z(D, U) < -1e-9


def test_phi_on_disk_rejects_rim_vertex(fixtures):
    T = fixtures("remark_torus")
    dec = decompose(T)
    D = build_disk(T, dec, T.resolve(["v1"]))
    with pytest.raises(ValueError):
        phi_Z(D, [T.vertex_index["v2"]])


# -- limit geometry ------------------------------------------------------------------

def test_limit_length_examples(fixtures):
    T = two_vertex(PI / 2)
    assert limit_length(T, "p", np.array([3.0, 4.0])) == pytest.approx(5.0)
    T0 = two_vertex(0.0)
    assert limit_length(T0, "p", np.array([1.0, 1.0])) == pytest.approx(2.0)
    G = fixtures("genus2_critical")
    r = np.linspace(0.5, 2.0, G.n_vertices)
    for e in range(len(G.edges)):
        assert limit_length(G, e, r) == edge_length(E, G, e, r)


def test_limit_angle_single_interior_corner(fixtures):
    T = fixtures("remark_torus")
    dec = decompose(T)
    lc = LimitCurvature(T, dec, "Z#1")
    for f in range(len(lc.disk.faces)):
        i = int(np.flatnonzero(lc.inner[f])[0])
        j, theta = limit_angle(T, dec, "Z#1", f, i, [1.0])
        assert j == 1
        assert theta == pytest.approx(2 * PI / 3, abs=1e-14)


def test_two_interior_corners_right_angles_limit():
    # boundary circle much larger than both interior circles
    a = triangle_angles(E, [1.0, 2.0, 1e10], [PI / 2, PI / 2, 0.4])
    assert a[0] == pytest.approx(PI / 2, abs=1e-8)
    assert a[1] == pytest.approx(PI / 2, abs=1e-8)


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_limit_angles_are_blown_up_disk_angles(name, fixtures):
    """Interior angles of the disk when every boundary circle is huge."""
    T = fixtures(name)
    dec = decompose(T)
    rng = np.random.default_rng(6)
    for el in dec.critical:
        lc = LimitCurvature(T, dec, el.label)
        D = lc.disk
        for _ in range(5):
            r = random_radii(rng, len(lc.order))
            rd = np.where(D.interior_mask, 1.0, 1e9)
            rd[D.interior_mask] = r[lc.slot[D.interior_mask]]
            want = face_angles(E, D, rd)
            got = lc.angles(r)
            np.testing.assert_allclose(got[lc.inner], want[lc.inner], atol=1e-6)
            np.testing.assert_allclose(lc(r), curvature_disk(D, rd)[D.interior_mask][
                np.argsort(lc.slot[D.interior_mask])], atol=1e-6)


def test_remark_limit_curvature_vanishes(fixtures):
    T = fixtures("remark_torus")
    dec = decompose(T)
    for r in (0.01, 1.0, 100.0):
        assert limit_curvature_KZ(T, dec, "Z#1", [r]) == pytest.approx([0.0], abs=1e-14)


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_limit_curvature_sums_to_zero(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    rng = np.random.default_rng(7)
    for el in dec.critical:
        K = LimitCurvature(T, dec, el.label)
        for _ in range(50):
            assert abs(K(random_radii(rng, len(K.order), 1.0)).sum()) < 1e-10


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_limit_curvature_ignores_diagonal(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    rng = np.random.default_rng(8)
    for el in dec.critical:
        quads = [c for c in el.children if dec.elements[c].link_size == 4]
        if not quads:
            continue
        choices = [dict(zip(quads, ch)) for ch in itertools.product((0, 1), repeat=len(quads))]
        Ks = [LimitCurvature(T, dec, el.label, ch) for ch in choices]
        for _ in range(20):
            r = random_radii(rng, len(Ks[0].order))
            for K in Ks[1:]:
                np.testing.assert_allclose(K(r), Ks[0](r), atol=1e-12)


def test_limit_curvature_accepts_full_vectors(fixtures):
    T = fixtures("nested_torus")
    dec = decompose(T)
    label = dec.label_of(T.resolve(["y", "z1", "z2"]))
    full = np.linspace(0.5, 1.5, T.n_vertices)
    K = LimitCurvature(T, dec, label)
    np.testing.assert_array_equal(limit_curvature_KZ(T, dec, label, full), K(full[K.order]))
    named = {v: full[k] for k, v in enumerate(T.vertices)}
    np.testing.assert_array_equal(limit_curvature_KZ(T, dec, label, named), K(full[K.order]))


# -- coordinates -----------------------------------------------------------------------

def test_euclidean_coordinates():
    assert coordinates(E, [1.0])[0] == 0.0
    np.testing.assert_allclose(inverse(E, coordinates(E, [0.3, 7.0])), [0.3, 7.0], rtol=1e-15)


def test_hyperbolic_roundtrip():
    r = np.geomspace(1e-6, 20, 400)
    np.testing.assert_allclose(inverse(H, coordinates(H, r)), r, rtol=1e-12)


def test_hyperbolic_coordinates_approach_zero_from_below():
    x = coordinates(H, [5.0, 20.0, 40.0])
    assert np.all(x < 0) and np.all(np.diff(x) > 0)
    assert x[-1] > -1e-16
    with pytest.raises(DomainError):
        inverse(H, [0.0])


# -- Jacobians -------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["remark_torus", "grid_torus", "nested_torus",
                                  "genus2_subcritical", "genus2_critical"])
def test_curvature_jacobian_structure(name, fixtures):
    T = fixtures(name)
    g = Geometry.of(T)
    rng = np.random.default_rng(9)
    for _ in range(3):
        x = coordinates(g, random_radii(rng, T.n_vertices, 0.5))
        J = curvature_jacobian(g, T, x)
        assert np.max(np.abs(J - J.T)) < 1e-6
        w = np.linalg.eigvalsh((J + J.T) / 2)
        if g is E:
            assert w[0] > -1e-8 and w[1] > 1e-6
            assert np.max(np.abs(J @ np.ones(T.n_vertices))) < 1e-6
        else:
            assert w[0] > 1e-8


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_limit_jacobian_is_psd_with_constant_kernel(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    rng = np.random.default_rng(10)
    for el in dec.critical:
        K = LimitCurvature(T, dec, el.label)
        n = len(K.order)
        x = rng.normal(scale=0.5, size=n)
        J = limit_jacobian(K, x)
        assert np.max(np.abs(J - J.T)) < 1e-6
        w = np.linalg.eigvalsh((J + J.T) / 2)
        assert w[0] > -1e-8
        assert np.max(np.abs(J @ np.ones(n))) < 1e-6
        if n > 1:
            assert w[1] > 1e-6


def test_fd_step_must_register():
    with pytest.raises(StepError):
        fd_jacobian(lambda y: y, np.array([1e12]))
