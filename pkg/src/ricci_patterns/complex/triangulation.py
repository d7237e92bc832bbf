"""Oriented combinatorial maps of weighted triangulations.

A face is a cyclic triple of directed edge references ``(edge index, sign)``;
``sign = +1`` traverses the edge from ``ends[0]`` to ``ends[1]``.  Corner ``i``
of a face sits at the tail of side ``i``; its adjacent sides are ``i`` and
``i - 1`` and its opposite side is ``i + 1`` (indices mod 3).

Vertices may repeat around a face (loop edges on a one-vertex torus, say), so
every count below is over corners, not distinct vertices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import SchemaError, TopologyError, WeightError

HALF_PI = math.pi / 2
# slack for weights written as decimal approximations of pi/2
WEIGHT_SLACK = 1e-12


@dataclass(frozen=True)
class Edge:
    id: str
    ends: tuple[int, int]
    weight: float


Side = tuple[int, int]  # (edge index, sign)


@dataclass(frozen=True, eq=False)
class CornerComplex:
    """Shared corner bookkeeping for closed surfaces and disks."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    faces: tuple[tuple[Side, Side, Side], ...]

    # -- index arrays -------------------------------------------------------

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_ends(self) -> np.ndarray:
        return np.array([e.ends for e in self.edges], dtype=np.intp).reshape(-1, 2)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=float)

    @cached_property
    def side_edge(self) -> np.ndarray:
        return np.array([[s[0] for s in f] for f in self.faces], dtype=np.intp).reshape(-1, 3)

    @cached_property
    def side_sign(self) -> np.ndarray:
        return np.array([[s[1] for s in f] for f in self.faces], dtype=np.intp).reshape(-1, 3)

    @cached_property
    def corner_vertex(self) -> np.ndarray:
        """(F, 3) vertex at each corner = tail of the side with the same index."""
        ends = self.edge_ends[self.side_edge]  # (F, 3, 2)
        tail = np.where(self.side_sign > 0, ends[..., 0], ends[..., 1])
        return tail

    @cached_property
    def opp_edge(self) -> np.ndarray:
        """(F, 3) edge opposite each corner."""
        return np.roll(self.side_edge, -1, axis=1)

    @cached_property
    def opp_weight(self) -> np.ndarray:
        return self.weights[self.opp_edge]

    @cached_property
    def twin(self) -> dict[tuple[int, int], tuple[int, int]]:
        """Map a side ``(face, position)`` to the other side of the same edge."""
        by_edge: dict[int, list[tuple[int, int]]] = {}
        for f, sides in enumerate(self.faces):
            for i, (e, _) in enumerate(sides):
                by_edge.setdefault(e, []).append((f, i))
        out = {}
        for uses in by_edge.values():
            if len(uses) == 2:
                a, b = uses
                out[a] = b
                out[b] = a
        return out

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def resolve(self, items: Iterable) -> frozenset[int]:
        """Turn vertex names or indices into a frozenset of indices."""
        out = set()
        for v in items:
            if isinstance(v, str):
                try:
                    out.add(self.vertex_index[v])
                except KeyError:
                    raise KeyError(f"unknown vertex {v!r}") from None
            else:
                iv = int(v)
                if not 0 <= iv < self.n_vertices:
                    raise KeyError(f"vertex index {iv} out of range")
                out.add(iv)
        return frozenset(out)

    def names(self, subset: Iterable[int]) -> list[str]:
        return sorted(self.vertices[i] for i in subset)

    def rotate(self, face: int, pos: int) -> tuple[int, int] | None:
        """Next corner around the same vertex, crossing the corner's outgoing side.

        Returns ``None`` when the outgoing side is a boundary side.
        """
        other = self.twin.get((face, pos))
        if other is None:
            return None
        g, m = other
        return g, (m + 1) % 3

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in self.vertices]
        for a, b in self.edge_ends:
            if a != b:
                adj[a].add(int(b))
                adj[b].add(int(a))
        return adj

    def components(self, subset: Iterable[int]) -> list[frozenset[int]]:
        """Connected components of the subcomplex spanned by ``subset``."""
        remaining = set(subset)
        adj = self._adj
        comps = []
        while remaining:
            seed = min(remaining)
            stack = [seed]
            comp = {seed}
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if w in remaining and w not in comp:
                        comp.add(w)
                        stack.append(w)
            remaining -= comp
            comps.append(frozenset(comp))
        comps.sort(key=lambda c: min(c))
        return comps

    @cached_property
    def _adj(self) -> list[set[int]]:
        return self.adjacency()

    # -- structural checks ----------------------------------------------------

    def _check_faces(self) -> None:
        n_e = len(self.edges)
        for f, sides in enumerate(self.faces):
            if len(sides) != 3:
                raise TopologyError(f"face {f} has {len(sides)} sides, expected 3")
            ids = [s[0] for s in sides]
            for e, sgn in sides:
                if not 0 <= e < n_e or sgn not in (1, -1):
                    raise TopologyError(f"face {f} has malformed side {(e, sgn)}")
            if len(set(ids)) != 3:
                raise TopologyError(
                    f"face {f} uses edge {self.edges[ids[0]].id!r} more than once"
                    if ids[0] in ids[1:] else f"face {f} repeats an edge")
            for i in range(3):
                e, sgn = sides[i]
                head = self.edges[e].ends[1] if sgn > 0 else self.edges[e].ends[0]
                e2, sgn2 = sides[(i + 1) % 3]
                tail = self.edges[e2].ends[0] if sgn2 > 0 else self.edges[e2].ends[1]
                if head != tail:
                    raise TopologyError(f"face {f} is not a closed cycle at side {i}")
        for e in self.edges:
            w = e.weight
            if not (math.isfinite(w) and -WEIGHT_SLACK <= w <= HALF_PI + WEIGHT_SLACK):
                raise WeightError(f"edge {e.id!r} weight {w!r} outside [0, pi/2]")

    def _vertex_orbits(self) -> dict[int, int]:
        """Number of corner-rotation orbits per vertex (1 for a manifold point)."""
        seen = set()
        orbits: dict[int, int] = {}
        cv = self.corner_vertex
        for f in range(len(self.faces)):
            for i in range(3):
                if (f, i) in seen:
                    continue
                v = int(cv[f, i])
                orbits[v] = orbits.get(v, 0) + 1
                # walk both ways so boundary fans are collected in one orbit
                for step in (self._rot_fwd, self._rot_back):
                    cur = (f, i)
                    while cur is not None and cur not in seen:
                        seen.add(cur)
                        cur = step(*cur)
                    seen.discard(None)
                seen.add((f, i))
        return orbits

    def _rot_fwd(self, f, i):
        return self.rotate(f, i)

    def _rot_back(self, f, i):
        # cross the incoming side (i - 1) instead
        other = self.twin.get((f, (i - 1) % 3))
        if other is None:
            return None
        return other

    def corner_counts(self) -> np.ndarray:
        return np.bincount(self.corner_vertex.ravel(), minlength=self.n_vertices)


@dataclass(frozen=True, eq=False)
class WeightedTriangulation(CornerComplex):
    """Weighted triangulation of a closed oriented surface with chi <= 0."""

    lifts_to_cover: bool = True
    name: str = ""

    def __post_init__(self):
        self._validate()

    @property
    def chi(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    @property
    def genus(self) -> int:
        return (2 - self.chi) // 2

    def _validate(self) -> None:
        if not self.vertices:
            raise TopologyError("triangulation has no vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise TopologyError("duplicate vertex identifiers")
        if len({e.id for e in self.edges}) != len(self.edges):
            raise TopologyError("duplicate edge identifiers")
        self._check_faces()
        uses: dict[int, list[int]] = {}
        for sides in self.faces:
            for e, sgn in sides:
                uses.setdefault(e, []).append(sgn)
        for i, e in enumerate(self.edges):
            signs = uses.get(i, [])
            if len(signs) != 2:
                raise TopologyError(f"edge {e.id!r} used {len(signs)} times, expected 2")
            if sorted(signs) != [-1, 1]:
                raise TopologyError(f"edge {e.id!r} has matching orientations on both sides")
        used = set(self.corner_vertex.ravel().tolist())
        if used != set(range(len(self.vertices))):
            missing = sorted(set(range(len(self.vertices))) - used)
            raise TopologyError(f"isolated vertices: {[self.vertices[i] for i in missing]}")
        for v, n in self._vertex_orbits().items():
            if n != 1:
                raise TopologyError(f"vertex {self.vertices[v]!r} is not a manifold point")
        if len(self.components(range(len(self.vertices)))) != 1:
            raise TopologyError("surface is not connected")
        chi = self.chi
        if chi % 2:
            raise TopologyError(f"odd Euler characteristic {chi}")
        if chi > 0:
            raise TopologyError(f"Euler characteristic {chi} > 0 is not supported")
        self._check_short_loops()

    def _check_short_loops(self) -> None:
        # Two faces glued along two edges around a valence-2 vertex form a disk
        # bounded by at most two edges: a null-homotopic bigon or monogon.
        counts = self.corner_counts()
        for v in np.flatnonzero(counts <= 2):
            raise TopologyError(
                f"vertex {self.vertices[v]!r} has valence {counts[v]}: "
                "its star is a disk bounded by at most two edges")


@dataclass(frozen=True, eq=False)
class DiskTriangulation(CornerComplex):
    """Triangulated closed disk cut out of a closed surface.

    ``origin[k]`` is the surface vertex that disk vertex ``k`` covers; several
    boundary corners may cover the same surface vertex.
    """

    origin: tuple[int, ...] = ()
    interior: tuple[bool, ...] = ()
    boundary: tuple[Side, ...] = ()
    element: str = ""
    provenance: tuple = ()

    def __post_init__(self):
        self._check_faces()
        uses: dict[int, int] = {}
        for sides in self.faces:
            for e, _ in sides:
                uses[e] = uses.get(e, 0) + 1
        bnd = {e for e, _ in self.boundary}
        for i, e in enumerate(self.edges):
            n = uses.get(i, 0)
            if n != (1 if i in bnd else 2):
                raise TopologyError(f"disk edge {e.id!r} used {n} times")
        chi = len(self.vertices) - len(self.edges) + len(self.faces)
        if chi != 1:
            raise TopologyError(f"disk has Euler characteristic {chi}")

    @cached_property
    def interior_mask(self) -> np.ndarray:
        return np.array(self.interior, dtype=bool)

    def pull_back(self, r: np.ndarray) -> np.ndarray:
        """Disk radii from a metric on the surface vertices."""
        return np.asarray(r, dtype=float)[list(self.origin)]


# -- (de)serialisation --------------------------------------------------------

def _parse_ref(ref, edge_index: Mapping[str, int], face_no: int) -> Side:
    if not isinstance(ref, str) or len(ref) < 2 or ref[0] not in "+-":
        raise SchemaError(f"face {face_no}: bad directed edge reference {ref!r}")
    name = ref[1:]
    if name not in edge_index:
        raise SchemaError(f"face {face_no}: unknown edge {name!r}")
    return edge_index[name], (1 if ref[0] == "+" else -1)


def from_document(doc: Mapping, name: str = "") -> WeightedTriangulation:
    """Build a validated triangulation from a parsed JSON document."""
    if not isinstance(doc, Mapping):
        raise SchemaError("document must be a JSON object")
    for key in ("vertices", "edges", "faces"):
        if key not in doc:
            raise SchemaError(f"missing key {key!r}")
    lifts = doc.get("lifts_to_cover", True)
    if not isinstance(lifts, bool):
        raise SchemaError("lifts_to_cover must be a boolean")
    if not lifts:
        raise TopologyError("input does not assert lifts_to_cover")
    verts = doc["vertices"]
    if not isinstance(verts, list) or not all(isinstance(v, str) for v in verts):
        raise SchemaError("vertices must be a list of strings")
    vidx = {v: i for i, v in enumerate(verts)}
    edges = []
    if not isinstance(doc["edges"], list):
        raise SchemaError("edges must be a list")
    for k, rec in enumerate(doc["edges"]):
        if not isinstance(rec, Mapping) or not {"id", "ends", "weight"} <= set(rec):
            raise SchemaError(f"edge record {k} needs id, ends and weight")
        ends = rec["ends"]
        if (not isinstance(ends, list) or len(ends) != 2
                or not all(isinstance(x, str) and x in vidx for x in ends)):
            raise SchemaError(f"edge {rec.get('id')!r}: ends must name two known vertices")
        w = rec["weight"]
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise SchemaError(f"edge {rec['id']!r}: weight must be a number")
        if not isinstance(rec["id"], str):
            raise SchemaError(f"edge record {k}: id must be a string")
        edges.append(Edge(rec["id"], (vidx[ends[0]], vidx[ends[1]]), float(w)))
    eidx = {e.id: i for i, e in enumerate(edges)}
    if len(eidx) != len(edges):
        raise SchemaError("duplicate edge identifiers")
    faces = []
    if not isinstance(doc["faces"], list):
        raise SchemaError("faces must be a list")
    for k, refs in enumerate(doc["faces"]):
        if not isinstance(refs, list) or len(refs) != 3:
            raise SchemaError(f"face {k} must list exactly three directed edges")
        faces.append(tuple(_parse_ref(ref, eidx, k) for ref in refs))
    return WeightedTriangulation(tuple(verts), tuple(edges), tuple(faces),
                                 lifts_to_cover=lifts, name=name)


def parse_triangulation(document: str | bytes | Mapping, name: str = "") -> WeightedTriangulation:
    """Parse a JSON document (text or already-decoded mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc}") from None
    return from_document(document, name=name)


def to_document(T: CornerComplex) -> dict:
    """Inverse of :func:`from_document`."""
    return {
        "lifts_to_cover": True,
        "vertices": list(T.vertices),
        "edges": [{"id": e.id, "ends": [T.vertices[e.ends[0]], T.vertices[e.ends[1]]],
                   "weight": e.weight} for e in T.edges],
        "faces": [[("+" if s > 0 else "-") + T.edges[e].id for e, s in f] for f in T.faces],
    }


def build(vertices: Sequence[str], edges: Sequence[tuple[str, str, str, float]],
          faces: Sequence[Sequence[str]], name: str = "") -> WeightedTriangulation:
    """Convenience constructor: ``edges`` as ``(id, tail, head, weight)``."""
    doc = {
        "vertices": list(vertices),
        "edges": [{"id": i, "ends": [a, b], "weight": w} for i, a, b, w in edges],
        "faces": [list(f) for f in faces],
    }
    return from_document(doc, name=name)
