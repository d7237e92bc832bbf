"""Hierarchy of critical subsets, the quotient cell-division and the blown-up disks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from ..errors import InternalError, PreconditionError
from .subsets import SubsetReport, Verdict, classify, link
from .triangulation import (CornerComplex, DiskTriangulation, Edge,
                            WeightedTriangulation)

FULL = "V"


def boundary_cycle(T: CornerComplex, U) -> list[tuple[int, int]]:
    """Link sides of U as a single directed cycle; U lies to the left of each side.

    Side ``k`` starts at the vertex where side ``k - 1`` ends.
    """
    lk = link(T, U)
    if not lk:
        return []
    members = T.resolve(U)
    cv = T.corner_vertex
    by_face = {l.face: l.corner for l in lk}
    start = (lk[0].face, (lk[0].corner + 1) % 3)
    cycle = [start]
    limit = 3 * len(T.faces) + 3
    f, c = start[0], (start[1] + 1) % 3  # corner at the head of the current side
    while True:
        # rotate about the head vertex until the next side opposite a U corner
        for _ in range(limit):
            nxt = T.rotate(f, c)
            if nxt is None:
                raise InternalError("boundary walk left the surface")
            f, c = nxt
            if f in by_face and by_face[f] == (c + 2) % 3:
                break
            if int(cv[f, (c + 2) % 3]) not in members:
                raise InternalError("boundary walk lost contact with the subset")
        else:
            raise InternalError("boundary walk did not terminate")
        side = (f, c)
        if side == start:
            break
        cycle.append(side)
        if len(cycle) > len(lk):
            raise InternalError("link sides do not close into one cycle")
        c = (c + 1) % 3
    if len(cycle) != len(lk):
        raise InternalError("link of a critical subset is not a single cycle")
    return cycle


@dataclass(frozen=True)
class Element:
    """One Z in the critical family, or the whole vertex set (label ``V``)."""

    label: str
    members: frozenset[int]
    prime: frozenset[int]        # Z'
    core: frozenset[int]         # V_Z
    rim: frozenset[int]          # V^Z
    boundary: tuple[tuple[int, int], ...]
    rim_corners: tuple[int, ...]  # vertex at each boundary position
    children: tuple[str, ...]    # labels of the components of Z'
    level: int

    @property
    def link_size(self) -> int:
        return len(self.boundary)

    @property
    def diagonals(self) -> tuple[tuple[int, int], ...]:
        return ((0, 2), (1, 3)) if self.link_size == 4 else ()


@dataclass(frozen=True)
class Decomposition:
    levels: tuple[frozenset[int], ...]
    level_of: tuple[int, ...]
    elements: dict[str, Element]
    z_t: frozenset[int]

    @property
    def depth(self) -> int:
        """N, the index of the last nonempty level."""
        return len(self.levels) - 1

    def label_of(self, Z) -> str:
        for label, el in self.elements.items():
            if el.members == Z:
                return label
        raise KeyError(f"{sorted(Z)} is not an element of the decomposition")

    def element(self, key) -> Element:
        if isinstance(key, Element):
            return key
        if isinstance(key, str):
            return self.elements[key]
        return self.elements[self.label_of(frozenset(key))]

    @property
    def critical(self) -> list[Element]:
        return [el for label, el in self.elements.items() if label != FULL]

    def to_json(self, T: CornerComplex) -> dict:
        return {
            "levels": [T.names(L) for L in self.levels],
            "level_of": {T.vertices[v]: n for v, n in enumerate(self.level_of)},
            "elements": [{
                "label": el.label,
                "vertices": T.names(el.members),
                "prime": T.names(el.prime),
                "core": T.names(el.core),
                "rim": T.names(el.rim),
                "boundary_edges": [T.edges[T.side_edge[f, i]].id for f, i in el.boundary],
                "boundary_corners": [T.vertices[v] for v in el.rim_corners],
                "diagonals": [list(d) for d in el.diagonals],
                "children": list(el.children),
                "level": el.level,
            } for el in self.elements.values()],
        }


def decompose(T: WeightedTriangulation, report: SubsetReport | None = None) -> Decomposition:
    if report is None:
        report = classify(T)
    if report.verdict is not Verdict.CRITICAL:
        raise PreconditionError(f"decomposition needs a CRITICAL input, got {report.verdict.value}")
    family = list(report.family)
    fam_set = set(family)
    everything = frozenset(range(T.n_vertices))
    z_t = report.z_t

    for C in T.components(z_t):
        if C not in fam_set:
            raise InternalError(f"component {T.names(C)} of Z_T is not critical")

    # levels: each new level keeps the critical sets strictly inside a component
    levels = [everything - z_t]
    prev = z_t
    while prev:
        comps = T.components(prev)
        nxt = frozenset().union(*[Z for Z in family if any(Z < C for C in comps)])
        levels.append(prev - nxt)
        prev = nxt
    level_of = [-1] * T.n_vertices
    for n, L in enumerate(levels):
        for v in L:
            level_of[v] = n

    labels = {Z: f"Z#{k + 1}" for k, Z in enumerate(family)}
    elements: dict[str, Element] = {}
    for Z in [everything] + family:
        prime = frozenset().union(*[U for U in family if U < Z])
        core = Z - prime
        comps = T.components(prime)
        for C in comps:
            if C not in fam_set:
                raise InternalError(f"component {T.names(C)} of Z' is not critical")
        boundary = tuple(boundary_cycle(T, Z)) if Z != everything else ()
        rim_corners = tuple(int(T.corner_vertex[f, i]) for f, i in boundary)
        lv = {level_of[v] for v in core}
        if len(lv) != 1:
            raise InternalError(f"V_Z for {T.names(Z)} spans several levels")
        n = lv.pop()
        if core not in T.components(levels[n]):
            raise InternalError(f"V_Z for {T.names(Z)} is not a component of its level")
        label = FULL if Z == everything else labels[Z]
        elements[label] = Element(label, Z, prime, core, frozenset(rim_corners), boundary,
                                  rim_corners, tuple(labels[C] for C in comps), n)
    cores = sorted(sorted(el.core) for el in elements.values())
    comps_all = sorted(sorted(C) for L in levels for C in T.components(L))
    if cores != comps_all:
        raise InternalError("elements do not correspond to level components")
    return Decomposition(tuple(levels), tuple(level_of), elements, z_t)


# -- cell assembly --------------------------------------------------------------

class HalfSide(NamedTuple):
    key: tuple
    twin: tuple | None
    edge: tuple      # ("e", surface edge) or ("d", element label)
    sign: int
    tail: int        # surface vertex
    weight: float


def _surface_face(T: CornerComplex, f: int) -> list[HalfSide]:
    out = []
    for i in range(3):
        e = int(T.side_edge[f, i])
        tw = T.twin.get((f, i))
        out.append(HalfSide(("s", f, i), ("s",) + tw if tw else None, ("e", e),
                            int(T.side_sign[f, i]), int(T.corner_vertex[f, i]),
                            T.edges[e].weight))
    return out


def hat_faces(T: CornerComplex, el: Element, diagonal: int = 0) -> list[list[HalfSide]]:
    """The triangle f_U, or f_U split by the diagonal from corner p to p + 2."""
    sides = [_surface_face(T, f)[i] for f, i in el.boundary]
    if el.link_size == 3:
        return [sides]
    if diagonal not in (0, 1):
        raise ValueError("diagonal index must be 0 or 1")
    p = diagonal
    b = [sides[(p + k) % 4] for k in range(4)]
    d = ("d", el.label)
    back = HalfSide(("d", el.label, 0), ("d", el.label, 1), d, -1, b[2].tail, 0.0)
    fwd = HalfSide(("d", el.label, 1), ("d", el.label, 0), d, 1, b[0].tail, 0.0)
    return [[b[0], b[1], back], [fwd, b[2], b[3]]]


def diagonal_ends(el: Element, diagonal: int) -> tuple[int, int]:
    return el.rim_corners[diagonal], el.rim_corners[diagonal + 2]


def _edge_record(T: CornerComplex, key: tuple, ends, weight: float) -> Edge:
    kind, ref = key
    name = T.edges[ref].id if kind == "e" else f"diag[{ref}]"
    return Edge(name, ends, weight)


def build_quotient(T: WeightedTriangulation, dec: Decomposition,
                   diagonals: Mapping[str, int] | None = None,
                   check: bool = True) -> WeightedTriangulation:
    """Collapse every component of Z_T to its triangle or split quadrilateral."""
    diagonals = dict(diagonals or {})
    top = dec.elements[FULL]
    keep = sorted(top.core)
    vmap = {v: k for k, v in enumerate(keep)}
    cells = [_surface_face(T, f) for f in range(len(T.faces))
             if not any(int(v) in dec.z_t for v in T.corner_vertex[f])]
    for label in top.children:
        cells.extend(hat_faces(T, dec.elements[label], diagonals.get(label, 0)))
    edges: list[Edge] = []
    eidx: dict[tuple, int] = {}
    faces = []
    for cell in cells:
        face = []
        for k, h in enumerate(cell):
            if h.edge not in eidx:
                head = cell[(k + 1) % 3].tail
                ends = (vmap[h.tail], vmap[head]) if h.sign > 0 else (vmap[head], vmap[h.tail])
                eidx[h.edge] = len(edges)
                edges.append(_edge_record(T, h.edge, ends, h.weight))
            face.append((eidx[h.edge], h.sign))
        faces.append(tuple(face))
    Q = WeightedTriangulation(tuple(T.vertices[v] for v in keep), tuple(edges), tuple(faces),
                              name=(T.name + "/quotient") if T.name else "quotient")
    if check:
        verdict = classify(Q).verdict
        if verdict is not Verdict.SUBCRITICAL:
            raise InternalError(f"quotient is {verdict.value}, expected SUBCRITICAL")
    return Q


def default_diagonal(dec: Decomposition, el: Element, child: Element) -> int:
    """Avoid a half-triangle with all three corners on the rim of ``el``."""
    if child.link_size != 4:
        return 0
    for p in (0, 1):
        corners = [child.rim_corners[(p + k) % 4] for k in (0, 1, 2)]
        other = [child.rim_corners[(p + k) % 4] for k in (2, 3, 0)]
        if not (all(v not in el.core for v in corners) or all(v not in el.core for v in other)):
            return p
    return 0


def build_disk(T: WeightedTriangulation, dec: Decomposition, Z,
               diagonals: Mapping[str, int] | None = None) -> DiskTriangulation:
    """The triangulated disk filling f_Z, with sub-elements collapsed."""
    el = dec.element(Z)
    if el.label == FULL:
        raise PreconditionError("build_disk needs a critical element, not V")
    diagonals = dict(diagonals or {})
    cells: list[list[HalfSide]] = []
    provenance = []
    for f in range(len(T.faces)):
        cv = [int(v) for v in T.corner_vertex[f]]
        if any(v in el.core for v in cv) and not any(v in el.prime for v in cv):
            cells.append(_surface_face(T, f))
            provenance.append(("face", f))
    for label in el.children:
        child = dec.elements[label]
        p = diagonals.get(label, default_diagonal(dec, el, child))
        for half, cell in enumerate(hat_faces(T, child, p)):
            cells.append(cell)
            provenance.append(("hat", label, half))

    rim_keys = {("s", f, i): k for k, (f, i) in enumerate(el.boundary)}
    where = {}
    for k, cell in enumerate(cells):
        for i, h in enumerate(cell):
            if h.key in where:
                raise InternalError(f"side {h.key} appears twice in the disk of {el.label}")
            where[h.key] = (k, i)

    parent = {(k, i): (k, i) for k in range(len(cells)) for i in range(3)}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for k, cell in enumerate(cells):
        for i, h in enumerate(cell):
            if h.key in rim_keys:
                continue
            if h.twin not in where:
                raise InternalError(f"disk of {el.label} has an unmatched interior side")
            k2, i2 = where[h.twin]
            union((k, i), (k2, (i2 + 1) % 3))
            union((k, (i + 1) % 3), (k2, i2))

    classes: dict[tuple, list] = {}
    for a in parent:
        classes.setdefault(find(a), []).append(a)
    origin_of = {}
    for root, members in classes.items():
        origins = {cells[k][i].tail for k, i in members}
        if len(origins) != 1:
            raise InternalError("a disk vertex covers two surface vertices")
        origin_of[root] = origins.pop()

    rim_class = {}
    for key, pos in rim_keys.items():
        if key not in where:
            raise InternalError(f"boundary side {key} missing from the disk of {el.label}")
        root = find(where[key])
        if root in rim_class:
            raise InternalError("two boundary corners merged into one disk vertex")
        rim_class[root] = pos
    inner = sorted((r for r in classes if r not in rim_class),
                   key=lambda r: T.vertices[origin_of[r]])
    if sorted(origin_of[r] for r in inner) != sorted(el.core):
        raise InternalError(f"interior of the disk of {el.label} does not match V_Z")
    order = inner + sorted(rim_class, key=rim_class.get)
    vid = {r: n for n, r in enumerate(order)}
    names = [T.vertices[origin_of[r]] for r in inner]
    names += [f"{T.vertices[origin_of[r]]}@{rim_class[r]}" for r in order[len(inner):]]

    edges: list[Edge] = []
    side_edge: dict[tuple, int] = {}
    used_names: set[str] = set()
    faces = []
    for k, cell in enumerate(cells):
        face = []
        for i, h in enumerate(cell):
            if h.key not in side_edge:
                tail, head = vid[find((k, i))], vid[find((k, (i + 1) % 3))]
                rec = _edge_record(T, h.edge, (tail, head), h.weight)
                name = rec.id
                while name in used_names:
                    name += "'"
                used_names.add(name)
                side_edge[h.key] = len(edges)
                edges.append(Edge(name, (tail, head), rec.weight))
                if h.key not in rim_keys:
                    side_edge[h.twin] = len(edges) - 1
                face.append((side_edge[h.key], 1))
            else:
                face.append((side_edge[h.key], -1))
        faces.append(tuple(face))

    # boundary sides are met once, so each carries its edge's own direction
    boundary = tuple((side_edge[("s", f, i)], 1) for f, i in el.boundary)
    if len(rim_class) != el.link_size:
        raise InternalError("boundary corner count differs from the link size")
    return DiskTriangulation(
        tuple(names), tuple(edges), tuple(faces),
        origin=tuple(origin_of[r] for r in order),
        interior=tuple([True] * len(inner) + [False] * len(rim_class)),
        boundary=boundary, element=el.label, provenance=tuple(provenance))

