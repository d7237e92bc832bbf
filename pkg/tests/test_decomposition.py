from __future__ import annotations

import itertools
import math

import pytest

from ricci_patterns.complex.decomposition import FULL
from ricci_patterns.complex import (Verdict, boundary_cycle, build_disk, build_quotient,
                                    classify, decompose)
from ricci_patterns.errors import PreconditionError
from ricci_patterns.verify import oracle_phi

from conftest import CRITICAL_FIXTURES


def oracle_levels(T):
    """Levels from an exhaustive phi scan over every subset, by the nesting rule."""
    adj = T.adjacency()

    def comps(U):
        U, out = set(U), []
        while U:
            seed = min(U)
            comp, stack = {seed}, [seed]
            while stack:
                for w in adj[stack.pop()] & U:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            U -= comp
            out.append(frozenset(comp))
        return out

    family = []
    for k in range(1, T.n_vertices):
        for U in itertools.combinations(range(T.n_vertices), k):
            if len(comps(U)) == 1 and abs(oracle_phi(T, U)) < 1e-9:
                family.append(frozenset(U))
    zs = [frozenset().union(*family)]
    while zs[-1]:
        parents = comps(zs[-1])
        zs.append(frozenset().union(*[Z for Z in family
                                      if any(Z < C for C in parents)] or [frozenset()]))
    everything = frozenset(range(T.n_vertices))
    levels = [everything - zs[0]] + [zs[n] - zs[n + 1] for n in range(len(zs) - 1)]
    return [L for L in levels if L]


def names(T, levels):
    return [T.names(L) for L in levels]


def test_remark_decomposition(fixtures):
    T = fixtures("remark_torus")
    dec = decompose(T)
    assert dec.depth == 1
    assert names(T, dec.levels) == [["v2"], ["v1"]]
    el = dec.element(T.resolve(["v1"]))
    assert el.prime == frozenset()
    assert T.names(el.core) == ["v1"]
    assert T.names(el.rim) == ["v2"]
    assert el.link_size == 3
    assert sorted(T.edges[T.side_edge[f, i]].id for f, i in el.boundary) == ["a", "b", "c"]


def test_subcritical_is_refused(fixtures):
    with pytest.raises(PreconditionError):
        decompose(fixtures("grid_torus"))


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_levels_match_exhaustive_scan(name, fixtures):
    T = fixtures(name)
    assert names(T, decompose(T).levels) == names(T, oracle_levels(T))


def test_nested_levels(fixtures):
    T = fixtures("nested_torus")
    dec = decompose(T)
    assert names(T, dec.levels)[1:] == [["q", "z1", "z2"], ["y"]]
    outer = dec.element(T.resolve(["y", "z1", "z2"]))
    inner = dec.element(T.resolve(["y"]))
    assert outer.core == outer.members - inner.members
    assert outer.children == (inner.label,)
    assert inner.level == outer.level + 1


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_cores_partition_vertices_level_by_level(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    seen = set()
    for n, level in enumerate(dec.levels):
        cores = [el.core for el in dec.elements.values() if el.level == n]
        assert frozenset().union(*cores) == level
        for c in cores:
            assert c and not (c & seen)
            seen |= c
    assert seen == set(range(T.n_vertices))
    for v, n in enumerate(dec.level_of):
        assert v in dec.levels[n]


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_boundary_walk_is_a_closed_cycle(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    for el in dec.critical:
        cyc = boundary_cycle(T, el.members)
        assert len(cyc) == el.link_size
        heads = [T.corner_vertex[f, (i + 1) % 3] for f, i in cyc]
        tails = [T.corner_vertex[f, i] for f, i in cyc]
        assert tails[1:] + tails[:1] == heads
        assert all(v not in el.members for v in tails)


# -- quotient --------------------------------------------------------------------------

def test_remark_quotient_census(fixtures):
    T = fixtures("remark_torus")
    Q = build_quotient(T, decompose(T))
    assert Q.vertices == ("v2",)
    assert (len(Q.edges), len(Q.faces)) == (3, 2)
    assert Q.chi == 0
    assert sorted(e.id for e in Q.edges) == ["a", "b", "c"]
    assert classify(Q).verdict is Verdict.SUBCRITICAL


def test_no_diagonals_without_four_links(fixtures):
    T = fixtures("chain_torus")
    Q = build_quotient(T, decompose(T))
    assert not any(e.id.startswith("diag") for e in Q.edges)


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_quotient_is_subcritical_for_every_diagonal(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    top = dec.elements[FULL]
    quads = [c for c in top.children if dec.elements[c].link_size == 4]
    for choice in itertools.product((0, 1), repeat=len(quads)):
        Q = build_quotient(T, dec, dict(zip(quads, choice)))
        assert Q.chi == T.chi
        assert classify(Q).verdict is Verdict.SUBCRITICAL
        assert sum(e.id.startswith("diag") for e in Q.edges) == len(quads)


# -- disks -------------------------------------------------------------------------------

def test_remark_disk(fixtures):
    T = fixtures("remark_torus")
    dec = decompose(T)
    D = build_disk(T, dec, T.resolve(["v1"]))
    assert sum(D.interior) == 1
    assert len(D.boundary) == 3
    assert len(D.faces) == 3
    assert all(p[0] == "face" for p in D.provenance)
    inner = [e.id for e in D.edges if D.interior[e.ends[0]] or D.interior[e.ends[1]]]
    assert sorted(inner) == ["p", "q", "s"]
    assert sorted(T.edges[T.edge_index[D.edges[e].id]].id for e, _ in D.boundary) == \
        ["a", "b", "c"]


@pytest.mark.parametrize("name", CRITICAL_FIXTURES)
def test_disk_face_census(name, fixtures):
    T = fixtures(name)
    dec = decompose(T)
    for el in dec.critical:
        D = build_disk(T, dec, el.label)
        plain = sum(1 for f in range(len(T.faces))
                    if any(int(v) in el.core for v in T.corner_vertex[f])
                    and not any(int(v) in el.prime for v in T.corner_vertex[f]))
        hats = sum(1 if dec.elements[c].link_size == 3 else 2 for c in el.children)
        assert len(D.faces) == plain + hats
        assert sum(p[0] == "hat" for p in D.provenance) == hats
        assert len(D.boundary) == el.link_size
        assert sum(D.interior) == len(el.core)
        if not el.prime:
            assert not any(e.id.startswith("diag") for e in D.edges)


def test_two_level_disk_has_hat_faces(fixtures):
    T = fixtures("nested_torus")
    dec = decompose(T)
    D = build_disk(T, dec, T.resolve(["y", "z1", "z2"]))
    assert sum(p[0] == "hat" for p in D.provenance) == 2


def test_decomposition_json(fixtures):
    T = fixtures("nested_torus")
    doc = decompose(T).to_json(T)
    labels = {e["label"]: e for e in doc["elements"]}
    assert labels["V"]["level"] == 0
    q = next(e for e in doc["elements"] if e["vertices"] == ["q"])
    assert q["diagonals"] == [[0, 2], [1, 3]]
    assert doc["level_of"]["y"] == 2
