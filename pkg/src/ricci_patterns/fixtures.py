"""Hand-built weighted triangulations used by tests, examples and the CLI.

Every fixture is produced as a JSON document so it can be written to disk and
parsed back through the same validation path as user input.
"""

from __future__ import annotations

import copy
import json
import math
from importlib import resources
from typing import Callable, Sequence

from .complex.triangulation import WeightedTriangulation, from_document

PI3 = math.pi / 3
PI2 = math.pi / 2


def _doc(vertices, edges, faces) -> dict:
    return {
        "lifts_to_cover": True,
        "vertices": list(vertices),
        "edges": [{"id": i, "ends": [a, b], "weight": w} for i, a, b, w in edges],
        "faces": [list(f) for f in faces],
    }


def _flip(ref: str) -> str:
    return ("-" if ref[0] == "+" else "+") + ref[1:]


def _tail(doc: dict, ref: str) -> str:
    edge = next(e for e in doc["edges"] if e["id"] == ref[1:])
    return edge["ends"][0] if ref[0] == "+" else edge["ends"][1]


def find_face(doc: dict, refs: Sequence[str]) -> int:
    """Index of the unique face containing every directed reference in ``refs``."""
    hits = [k for k, f in enumerate(doc["faces"]) if all(r in f for r in refs)]
    if len(hits) != 1:
        raise ValueError(f"{len(hits)} faces contain {list(refs)}")
    return hits[0]


def insert_vertex(doc: dict, face: int, name: str, weights: Sequence[float],
                  spokes: Sequence[str] | None = None) -> dict:
    """Stellar subdivision: a new vertex joined to the three corners of ``face``.

    Spoke ``k`` runs from corner ``k`` to the new vertex.
    """
    doc = copy.deepcopy(doc)
    refs = doc["faces"][face]
    spokes = list(spokes or [f"{name}_{k}" for k in range(3)])
    for k in range(3):
        doc["edges"].append({"id": spokes[k], "ends": [_tail(doc, refs[k]), name],
                             "weight": weights[k]})
    doc["vertices"].append(name)
    new = [[refs[i], "+" + spokes[(i + 1) % 3], "-" + spokes[i]] for i in range(3)]
    doc["faces"][face] = new[0]
    doc["faces"].extend(new[1:])
    return doc


def insert_in_quad(doc: dict, edge: str, name: str, weights: Sequence[float],
                   spokes: Sequence[str] | None = None) -> dict:
    """Delete ``edge`` and cone the resulting quadrilateral from a new vertex.

    ``weights[k]`` belongs to the spoke from quad corner ``k``; corner 0 is the
    tail of the deleted edge.
    """
    doc = copy.deepcopy(doc)
    lo = find_face(doc, ["-" + edge])
    up = find_face(doc, ["+" + edge])

    def rotated(f, last):
        k = f.index(last)
        return f[k + 1:] + f[:k]

    quad = rotated(doc["faces"][lo], "-" + edge) + rotated(doc["faces"][up], "+" + edge)
    spokes = list(spokes or [f"{name}_{k}" for k in range(4)])
    for k in range(4):
        doc["edges"].append({"id": spokes[k], "ends": [_tail(doc, quad[k]), name],
                             "weight": weights[k]})
    doc["vertices"].append(name)
    doc["edges"] = [e for e in doc["edges"] if e["id"] != edge]
    faces = [f for k, f in enumerate(doc["faces"]) if k not in (lo, up)]
    faces += [[quad[i], "+" + spokes[(i + 1) % 4], "-" + spokes[i]] for i in range(4)]
    doc["faces"] = faces
    return doc


def set_weights(doc: dict, **weights: float) -> dict:
    doc = copy.deepcopy(doc)
    for e in doc["edges"]:
        if e["id"] in weights:
            e["weight"] = weights[e["id"]]
    return doc


def _spread(k: int, lo: float = 0.3, hi: float = 1.2) -> float:
    """Deterministic, well-spread weights in [lo, hi]."""
    frac = (k * 0.6180339887498949 + 0.2) % 1.0
    return round(lo + (hi - lo) * frac, 6)


# -- tori ---------------------------------------------------------------------

def minimal_torus_doc(weight: float = PI3) -> dict:
    return _doc(["v"], [("a", "v", "v", weight), ("b", "v", "v", weight),
                        ("c", "v", "v", weight)],
                [["+a", "+b", "-c"], ["+c", "-a", "-b"]])


def remark_torus_doc(loop_weight: float = PI3,
                     spokes: Sequence[float] = (0.9, 0.6, 1.2)) -> dict:
    """One vertex v1 inside a face of the minimal torus on v2.

    The three loops at v2 form the link of v1, so phi({v1}) vanishes exactly
    when the loop weights sum to pi.
    """
    base = _doc(["v2"], [("a", "v2", "v2", loop_weight), ("b", "v2", "v2", loop_weight),
                         ("c", "v2", "v2", loop_weight)],
                [["+a", "+b", "-c"], ["+c", "-a", "-b"]])
    return insert_vertex(base, 1, "v1", spokes, spokes=["p", "q", "s"])


def supercritical_torus_doc() -> dict:
    return remark_torus_doc(loop_weight=PI2)


def chain_torus_doc() -> dict:
    """Two nested critical sets {w} within {v1, w} on the remark torus."""
    doc = remark_torus_doc(spokes=(0.9, PI3, PI3))
    face = find_face(doc, ["-a", "+s", "-q"])
    return insert_vertex(doc, face, "w", (0.5, 1.1, 0.7), spokes=["w0", "w1", "w2"])


def grid_torus_doc(n: int = 3, overrides: dict | None = None) -> dict:
    """n x n periodic grid, every square split along its diagonal."""
    g = lambda i, j: f"g{i % n}{j % n}"
    verts = [g(i, j) for i in range(n) for j in range(n)]
    edges = []
    k = 0
    for i in range(n):
        for j in range(n):
            for kind, (di, dj) in (("h", (1, 0)), ("v", (0, 1)), ("d", (1, 1))):
                edges.append((f"{kind}{i}{j}", g(i, j), g(i + di, j + dj), _spread(k)))
                k += 1
    faces = []
    for i in range(n):
        for j in range(n):
            faces.append([f"+h{i}{j}", f"+v{(i + 1) % n}{j}", f"-d{i}{j}"])
            faces.append([f"+d{i}{j}", f"-h{i}{(j + 1) % n}", f"-v{i}{j}"])
    doc = _doc(verts, edges, faces)
    return set_weights(doc, **(overrides or {}))


def nested_torus_doc() -> dict:
    """Grid torus with a 3-link critical set {z1, z2, y} containing the 4-link {y},
    and a separate 4-link critical vertex q.

    In the triangle A=g00, B=g10, C=g11 the edge AB has weight pi/2 and the
    other two sides sum to pi/2.  Inside it the quadrilateral A, B, z2, z1 has
    right-angle sides and is coned from y.
    """
    doc = grid_torus_doc(overrides={"h00": PI2, "v10": 0.6, "d00": PI2 - 0.6,
                                    "h11": PI2, "v21": PI2, "h12": PI2, "v11": PI2})
    A, B, C = "g00", "g10", "g11"
    new_edges = [("z1A", "z1", A, PI2), ("Bz2", B, "z2", PI2), ("z2z1", "z2", "z1", PI2),
                 ("Cz1", C, "z1", 0.7), ("Cz2", C, "z2", 0.5),
                 ("Ay", A, "y", 0.4), ("By", B, "y", 0.8), ("z2y", "z2", "y", 0.6),
                 ("z1y", "z1", "y", 1.0)]
    doc["vertices"] += ["z1", "z2", "y"]
    doc["edges"] += [{"id": i, "ends": [a, b], "weight": w} for i, a, b, w in new_edges]
    lower = find_face(doc, ["+h00", "+v10", "-d00"])
    blob = [["+h00", "+By", "-Ay"], ["+Bz2", "+z2y", "-By"], ["+z2z1", "+z1y", "-z2y"],
            ["+z1A", "+Ay", "-z1y"], ["-d00", "-z1A", "-Cz1"], ["+Cz1", "-z2z1", "-Cz2"],
            ["+Cz2", "-Bz2", "+v10"]]
    doc["faces"] = doc["faces"][:lower] + [blob[0]] + doc["faces"][lower + 1:] + blob[1:]
    return insert_in_quad(doc, "d11", "q", (0.7, 1.0, 0.45, 0.85), spokes=["q0", "q1", "q2", "q3"])


# -- genus two ----------------------------------------------------------------

GENUS2_FACES = [["+a", "+b", "-D2"], ["+D2", "-a", "-D3"], ["+D3", "-b", "-D4"],
                ["+D4", "+c", "-D5"], ["+D5", "+d", "-D6"], ["+D6", "-c", "-d"]]


def genus2_fan_doc(weights: dict | None = None, uniform: float | None = 0.5) -> dict:
    """One-vertex triangulation of the octagon a b a^-1 b^-1 c d c^-1 d^-1."""
    ids = ["a", "b", "c", "d", "D2", "D3", "D4", "D5", "D6"]
    w = {i: uniform for i in ids} if uniform is not None else {}
    w.update(weights or {})
    return _doc(["o"], [(i, "o", "o", w[i]) for i in ids], GENUS2_FACES)


GENUS2_WEIGHTS = {"a": 0.7, "b": 0.4, "c": 0.9, "d": 0.5, "D2": 0.9, "D3": 0.8,
                  "D4": 0.5, "D5": 0.6, "D6": 0.3}


def genus2_subcritical_doc() -> dict:
    doc = genus2_fan_doc(GENUS2_WEIGHTS, uniform=None)
    k = 0
    for f in range(6):
        doc = insert_vertex(doc, f, f"m{f + 1}", [_spread(k + i, 0.3, 1.3) for i in range(3)])
        k += 3
    return doc


def genus2_critical_doc() -> dict:
    """Faces 1-5 coned; face 6 holds z, and y sits in z's sub-triangle on c."""
    w = dict(GENUS2_WEIGHTS, c=PI3, d=PI3, D6=PI3)
    doc = genus2_fan_doc(w, uniform=None)
    k = 0
    for f in range(5):
        doc = insert_vertex(doc, f, f"m{f + 1}", [_spread(k + i, 0.3, 1.3) for i in range(3)])
        k += 3
    doc = insert_vertex(doc, 5, "z", (0.5, PI3, PI3), spokes=["p0", "p6", "p7"])
    sub = find_face(doc, ["-c", "+p7", "-p6"])
    return insert_vertex(doc, sub, "y", (0.8, 0.6, 1.0), spokes=["y0", "y1", "y2"])


BUILDERS: dict[str, Callable[[], dict]] = {
    "minimal_torus": minimal_torus_doc,
    "remark_torus": remark_torus_doc,
    "supercritical_torus": supercritical_torus_doc,
    "chain_torus": chain_torus_doc,
    "grid_torus": grid_torus_doc,
    "nested_torus": nested_torus_doc,
    "genus2_fan": genus2_fan_doc,
    "genus2_subcritical": genus2_subcritical_doc,
    "genus2_critical": genus2_critical_doc,
}


def fixture_doc(name: str) -> dict:
    return BUILDERS[name]()


def fixture(name: str) -> WeightedTriangulation:
    return from_document(fixture_doc(name), name=name)


def shipped_fixture_text(name: str) -> str:
    return resources.files("ricci_patterns").joinpath("data", f"{name}.json").read_text()


def dump(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"
