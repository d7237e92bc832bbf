"""Links, sub-complexes and the phi functional over vertex subsets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from ..errors import InternalError, SizeError
from .triangulation import CornerComplex, WeightedTriangulation

DEFAULT_CAP = 24
ZERO_TOL = 1e-9


class Verdict(str, enum.Enum):
    SUBCRITICAL = "SUBCRITICAL"
    CRITICAL = "CRITICAL"
    SUPERCRITICAL = "SUPERCRITICAL"


class LinkFace(NamedTuple):
    face: int
    corner: int  # position of the unique corner in U
    vertex: int
    opp_edge: int


@dataclass(frozen=True)
class VertexSubset:
    """A subset U together with per-face corner counts |f & U|."""

    members: frozenset[int]
    counts: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def of(cls, T: CornerComplex, items: Iterable) -> "VertexSubset":
        members = T.resolve(items)
        mask = np.zeros(T.n_vertices, dtype=bool)
        mask[list(members)] = True
        counts = mask[T.corner_vertex].sum(axis=1)
        return cls(members, counts)

    def faces_with(self, j: int) -> np.ndarray:
        """Indices of F_U^j."""
        return np.flatnonzero(self.counts == j)

    def __len__(self) -> int:
        return len(self.members)


def _as_subset(T: CornerComplex, U) -> VertexSubset:
    return U if isinstance(U, VertexSubset) else VertexSubset.of(T, U)


def link(T: CornerComplex, U) -> list[LinkFace]:
    """Faces with exactly one corner in U, with that corner and its opposite edge."""
    U = _as_subset(T, U)
    out = []
    cv = T.corner_vertex
    for f in U.faces_with(1):
        for i in range(3):
            if int(cv[f, i]) in U.members:
                out.append(LinkFace(int(f), i, int(cv[f, i]), int(T.opp_edge[f, i])))
                break
    return out


def subcomplex_chi(T: CornerComplex, U) -> int:
    """chi of the sub-complex spanned by U, by direct cell count."""
    U = _as_subset(T, U)
    ends = T.edge_ends
    inside = np.isin(ends, list(U.members)).all(axis=1)
    return len(U) - int(inside.sum()) + int((U.counts == 3).sum())


def chi_from_counts(T: CornerComplex, U) -> float:
    """The closed-surface identity |U| - (|F^2| + |F^3|) / 2."""
    U = _as_subset(T, U)
    return len(U) - (int((U.counts == 2).sum()) + int((U.counts == 3).sum())) / 2


def phi(T: CornerComplex, U) -> float:
    U = _as_subset(T, U)
    lk = link(T, U)
    s = math.fsum(math.pi - T.edges[l.opp_edge].weight for l in lk)
    return -s + 2 * math.pi * subcomplex_chi(T, U)


def phi_distinct(T: CornerComplex, U) -> float:
    """phi with |f & U| counted over distinct vertices instead of corners."""
    U = _as_subset(T, U)
    cv = T.corner_vertex
    total = 0.0
    f2 = 0
    for f in range(len(T.faces)):
        inside = [i for i in range(3) if int(cv[f, i]) in U.members]
        distinct = {int(cv[f, i]) for i in inside}
        if len(distinct) == 1:
            total += math.pi - T.weights[T.opp_edge[f, inside[0]]]
        elif len(distinct) >= 2:
            f2 += 1
    return -total + 2 * math.pi * (len(U) - f2 / 2)


def connected_subsets(T: CornerComplex, cap: int = DEFAULT_CAP) -> Iterator[frozenset[int]]:
    """Every connected nonempty vertex subset exactly once.

    Enumeration grows each subset from its smallest vertex, extending only by
    larger vertices that are exclusive neighbours of the newest addition.
    """
    n = T.n_vertices
    if n > cap:
        raise SizeError(f"{n} vertices exceeds the enumeration cap {cap}")
    adj = [sorted(a) for a in T.adjacency()]

    def extend(sub: frozenset[int], nbhd: frozenset[int], ext: list[int], root: int):
        yield sub
        ext = list(ext)
        while ext:
            w = ext.pop()
            fresh = [u for u in adj[w] if u > root and u not in nbhd]
            yield from extend(sub | {w}, nbhd | set(adj[w]), ext + fresh, root)

    for v in range(n):
        start = [u for u in adj[v] if u > v]
        yield from extend(frozenset([v]), frozenset(adj[v]) | {v}, start, v)


def _sort_key(T: CornerComplex, U: frozenset[int]):
    return (len(U), T.names(U))


@dataclass(frozen=True)
class SubsetReport:
    phi: dict[frozenset[int], float]
    family: tuple[frozenset[int], ...]
    link_size: dict[frozenset[int], int]
    z_t: frozenset[int]
    verdict: Verdict
    max_phi: float
    multiplicity_flags: tuple[frozenset[int], ...] = ()

    def family_with(self, k: int) -> list[frozenset[int]]:
        return [Z for Z in self.family if self.link_size[Z] == k]

    def to_json(self, T: CornerComplex) -> dict:
        def key(U):
            return "{" + ",".join(T.names(U)) + "}"
        return {
            "verdict": self.verdict.value,
            "max_phi": self.max_phi,
            "phi": {key(U): v for U, v in self.phi.items()},
            "family": [{"vertices": T.names(Z), "link_size": self.link_size[Z]}
                       for Z in self.family],
            "Z_T": T.names(self.z_t),
            "multiplicity_flags": [T.names(U) for U in self.multiplicity_flags],
        }


def classify(T: WeightedTriangulation, cap: int = DEFAULT_CAP,
             zero_tol: float = ZERO_TOL) -> SubsetReport:
    """phi over all connected proper subsets, the critical family and the verdict."""
    n = T.n_vertices
    full = frozenset(range(n))
    table = {}
    flags = []
    for U in sorted((U for U in connected_subsets(T, cap) if U != full),
                    key=lambda U: _sort_key(T, U)):
        value = phi(T, U)
        table[U] = value
        if abs(value - phi_distinct(T, U)) > zero_tol:
            flags.append(U)
    max_phi = max(table.values(), default=-math.inf)
    family = []
    link_size = {}
    # the contractibility constraints are only guaranteed when phi <= 0 throughout
    critical_pool = table.items() if max_phi <= zero_tol else ()
    for U, value in critical_pool:
        if abs(value) > zero_tol:
            continue
        lk = link(T, U)
        k = len(lk)
        theta = math.fsum(T.edges[l.opp_edge].weight for l in lk)
        if subcomplex_chi(T, U) != 1 or k not in (3, 4) or abs(theta - (k - 2) * math.pi) > zero_tol:
            raise InternalError(
                f"critical subset {T.names(U)} violates the contractibility constraints "
                f"(chi={subcomplex_chi(T, U)}, |Lk|={k}, sum Theta={theta!r})")
        family.append(U)
        link_size[U] = k
    if max_phi > zero_tol:
        verdict = Verdict.SUPERCRITICAL
    elif family:
        verdict = Verdict.CRITICAL
    else:
        verdict = Verdict.SUBCRITICAL
    z_t = frozenset().union(*family) if family else frozenset()
    return SubsetReport(table, tuple(family), link_size, z_t, verdict, max_phi, tuple(flags))
