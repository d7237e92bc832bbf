"""Lengths, angles and curvatures of circle patterns, and their blown-up limits.

Angles come from the half-angle formula on side lengths rather than the
arccos law of cosines: it keeps full relative precision for the nearly
degenerate triangles that appear when radii collapse under the flow.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .complex.decomposition import FULL, Decomposition, Element, build_disk, build_quotient
from .complex.subsets import phi as _phi
from .complex.triangulation import CornerComplex, DiskTriangulation, WeightedTriangulation
from .errors import DomainError, InternalError, StepError

TWO_PI = 2 * math.pi
CLAMP_TOL = 1e-9
FD_STEP = 1e-5


class Geometry(str, enum.Enum):
    EUCLIDEAN = "EUCLIDEAN"
    HYPERBOLIC = "HYPERBOLIC"

    @classmethod
    def of(cls, T: WeightedTriangulation) -> "Geometry":
        return cls.EUCLIDEAN if T.chi == 0 else cls.HYPERBOLIC


# -- coordinates ----------------------------------------------------------------

def _check_radii(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("radii must be finite and positive")
    return r


def coordinates(g: Geometry, r) -> np.ndarray:
    """x = log r (Euclidean) or log tanh(r / 2) (hyperbolic)."""
    r = _check_radii(r)
    if g is Geometry.EUCLIDEAN:
        return np.log(r)
    e = np.exp(-r)
    # log(1 - e^-r), taking whichever form keeps relative precision
    head = np.where(r < math.log(2), np.log(-np.expm1(-r)), np.log1p(-e))
    return head - np.log1p(e)


def inverse(g: Geometry, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("coordinates must be finite")
    if g is Geometry.EUCLIDEAN:
        return np.exp(x)
    if np.any(x >= 0):
        raise DomainError("hyperbolic coordinates must be negative")
    e = np.exp(x)
    tail = np.where(x < -math.log(2), np.log1p(-e), np.log(-np.expm1(x)))
    return np.log1p(e) - tail


def sigma(g: Geometry, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return r if g is Geometry.EUCLIDEAN else np.sinh(r)


# -- single-triangle kernels ----------------------------------------------------

def _lengths(g: Geometry, ra, rb, theta) -> np.ndarray:
    ra, rb, theta = np.broadcast_arrays(np.asarray(ra, float), np.asarray(rb, float),
                                        np.asarray(theta, float))
    k = np.sin(theta / 2) ** 2
    if g is Geometry.EUCLIDEAN:
        return np.sqrt((ra + rb) ** 2 - 4 * ra * rb * k)
    # 2 sinh(l/2) = e^{(a+b)/2} sqrt(Y), with Y bounded away from 0 for theta <= pi/2
    y = np.expm1(-(ra + rb)) ** 2 - k * np.expm1(-2 * ra) * np.expm1(-2 * rb)
    s = ra + rb
    with np.errstate(over="ignore"):
        small = 2 * np.arcsinh(np.exp(s / 2) * np.sqrt(y) / 2)
    return np.where(s > 600, s + np.log(y), small)


def _half_angle(g: Geometry, a, b, c, tol: float = CLAMP_TOL) -> np.ndarray:
    """Angle opposite side ``a`` in the triangle with sides a, b, c."""
    s = (a + b + c) / 2
    sa = (b + c - a) / 2
    sb = (a + c - b) / 2
    sc = (a + b - c) / 2
    worst = np.minimum(np.minimum(sa, sb), sc)
    if np.any(worst < -tol * s):
        raise InternalError("side lengths violate the triangle inequality")
    sa, sb, sc = (np.maximum(t, 0.0) for t in (sa, sb, sc))
    if g is Geometry.HYPERBOLIC:
        s, sa, sb, sc = np.sinh(s), np.sinh(sa), np.sinh(sb), np.sinh(sc)
    return 2 * np.arctan2(np.sqrt(sb * sc), np.sqrt(s * sa))


def triangle_angles(g: Geometry, r, theta) -> np.ndarray:
    """Angles at three circles of radii ``r`` whose pairwise weights are ``theta``.

    ``theta[i]`` is the weight of the edge opposite corner ``i``.
    """
    r = _check_radii(r)
    theta = np.asarray(theta, float)
    lengths = _lengths(g, np.roll(r, -1, axis=-1), np.roll(r, -2, axis=-1), theta)
    a, b, c = lengths[..., 0], lengths[..., 1], lengths[..., 2]
    return np.stack([_half_angle(g, a, b, c), _half_angle(g, b, c, a),
                     _half_angle(g, c, a, b)], axis=-1)


# -- closed surfaces and disks --------------------------------------------------

def edge_lengths(g: Geometry, T: CornerComplex, r) -> np.ndarray:
    r = _check_radii(r)
    ends = T.edge_ends
    return _lengths(g, r[ends[:, 0]], r[ends[:, 1]], T.weights)


def edge_length(g: Geometry, T: CornerComplex, e, r) -> float:
    e = T.edge_index[e] if isinstance(e, str) else int(e)
    r = _check_radii(r)
    a, b = T.edge_ends[e]
    return float(_lengths(g, r[a], r[b], T.weights[e]))


def face_angles(g: Geometry, T: CornerComplex, r) -> np.ndarray:
    """(F, 3) array of corner angles."""
    ell = edge_lengths(g, T, r)
    opp = ell[T.opp_edge]
    out_side = ell[T.side_edge]                 # side i, adjacent to corner i
    in_side = np.roll(out_side, 1, axis=1)      # side i - 1, adjacent to corner i
    return _half_angle(g, opp, out_side, in_side)


def corner_angle(g: Geometry, T: CornerComplex, corner: tuple[int, int], r) -> float:
    f, i = corner
    return float(face_angles(g, T, r)[f, i])


def cone_angles(g: Geometry, T: CornerComplex, r) -> np.ndarray:
    return np.bincount(T.corner_vertex.ravel(), weights=face_angles(g, T, r).ravel(),
                       minlength=T.n_vertices)


def curvature(g: Geometry, T: CornerComplex, r) -> np.ndarray:
    """K_v = 2 pi - (cone angle at v)."""
    return TWO_PI - cone_angles(g, T, r)


def curvature_disk(D: DiskTriangulation, r) -> np.ndarray:
    """Euclidean disk curvature: 2 pi - a_v inside, pi - a_v on the boundary."""
    a = cone_angles(Geometry.EUCLIDEAN, D, r)
    return np.where(D.interior_mask, TWO_PI, math.pi) - a


# -- limit geometry ---------------------------------------------------------------

def limit_length(T: CornerComplex, e, r) -> float:
    """Euclidean length whatever the surface geometry."""
    return edge_length(Geometry.EUCLIDEAN, T, e, r)


def _arccos(x: np.ndarray, tol: float = CLAMP_TOL) -> np.ndarray:
    if np.any(np.abs(x) > 1 + tol):
        raise InternalError("arccos argument outside [-1, 1]")
    return np.arccos(np.clip(x, -1.0, 1.0))


@dataclass(frozen=True)
class LimitMetric:
    """Radii on the interior vertices V_Z of one element, in ascending vertex order."""

    vertices: tuple[int, ...]
    r: np.ndarray
    normalized: bool = False

    def as_dict(self, T: CornerComplex) -> dict[str, float]:
        return {T.vertices[v]: float(x) for v, x in zip(self.vertices, self.r)}


def core_order(el: Element) -> list[int]:
    return sorted(el.core)


class LimitCurvature:
    """K_Z for one critical element, evaluated on its disk.

    ``__call__`` takes radii on V_Z in :func:`core_order`.
    """

    def __init__(self, T: WeightedTriangulation, dec: Decomposition, Z,
                 diagonals: Mapping[str, int] | None = None):
        self.T = T
        self.element = el = dec.element(Z)
        self.disk = D = build_disk(T, dec, el.label, diagonals)
        self.order = core_order(el)
        pos = {v: k for k, v in enumerate(self.order)}
        inner = D.interior_mask
        # disk vertex -> slot in the V_Z vector, or -1 on the boundary
        self.slot = np.array([pos[o] if inner[k] else -1 for k, o in enumerate(D.origin)])
        cv = D.corner_vertex
        self.cslot = self.slot[cv]
        self.inner = self.cslot >= 0
        self.j = self.inner.sum(axis=1)
        self.opp_w = D.weights[D.opp_edge]

    def angles(self, r) -> np.ndarray:
        """(F_D, 3) limit angles; zero at boundary corners."""
        r = _check_radii(r)
        out = np.zeros(self.cslot.shape)
        D = self.disk
        for f in range(len(D.faces)):
            j = self.j[f]
            for i in range(3):
                if not self.inner[f, i]:
                    continue
                if j == 1:
                    out[f, i] = math.pi - self.opp_w[f, i]
                elif j == 2:
                    # the other interior corner u and the boundary corner w
                    k = next(m for m in range(3) if m != i and self.inner[f, m])
                    w = 3 - i - k
                    rv, ru = r[self.cslot[f, i]], r[self.cslot[f, k]]
                    ell = _lengths(Geometry.EUCLIDEAN, rv, ru, self.opp_w[f, w])
                    num = rv * math.cos(self.opp_w[f, k]) - ru * math.cos(self.opp_w[f, i])
                    out[f, i] = _arccos(np.asarray(num / ell))
                else:
                    rr = r[self.cslot[f]]
                    out[f, :] = triangle_angles(Geometry.EUCLIDEAN, rr, self.opp_w[f])
                    break
        return out

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        theta = self.angles(r)
        mask = self.inner
        sums = np.bincount(self.cslot[mask], weights=theta[mask], minlength=len(self.order))
        return TWO_PI - sums


def _restrict(T: CornerComplex, order: list[int], r) -> np.ndarray:
    """Accept a full vector on V, a LimitMetric, a name map, or a vector on ``order``."""
    if isinstance(r, LimitMetric):
        lookup = dict(zip(r.vertices, r.r))
        return np.array([lookup[v] for v in order], float)
    if isinstance(r, Mapping):
        return np.array([r[T.vertices[v]] for v in order], float)
    r = np.asarray(r, float)
    if r.shape == (T.n_vertices,) and len(order) != T.n_vertices:
        return r[order]
    if r.shape != (len(order),):
        raise ValueError(f"expected {len(order)} or {T.n_vertices} radii, got {r.shape}")
    return r


def limit_angle(T: WeightedTriangulation, dec: Decomposition, Z, face: int, corner: int,
                r, diagonals: Mapping[str, int] | None = None) -> tuple[int, float]:
    """(j, theta^{f,j}) at a corner of disk face ``face``."""
    lc = LimitCurvature(T, dec, Z, diagonals)
    if not lc.inner[face, corner]:
        raise ValueError("corner is on the boundary of the disk")
    rr = _restrict(T, lc.order, r)
    return int(lc.j[face]), float(lc.angles(rr)[face, corner])


def limit_curvature_KZ(T: WeightedTriangulation, dec: Decomposition, Z, r,
                       diagonals: Mapping[str, int] | None = None) -> np.ndarray:
    """K_Z on V_Z (ascending vertex order)."""
    lc = LimitCurvature(T, dec, Z, diagonals)
    return lc(_restrict(T, lc.order, r))


class QuotientCurvature:
    """K_V: curvature of the quotient cell-division on V_0."""

    def __init__(self, T: WeightedTriangulation, dec: Decomposition,
                 g: Geometry | None = None):
        self.g = g or Geometry.of(T)
        self.quotient = Q = build_quotient(T, dec)
        self.order = [T.vertex_index[name] for name in Q.vertices]

    def __call__(self, r) -> np.ndarray:
        return curvature(self.g, self.quotient, r)


def phi_Z(D: DiskTriangulation, U: Iterable) -> float:
    """phi on the disk for U inside V_Z (surface vertex indices or names)."""
    U = list(U)
    by_origin = {}
    for k, (o, inner) in enumerate(zip(D.origin, D.interior)):
        if inner:
            by_origin[o] = k
    names = {D.vertices[k]: k for k in by_origin.values()}
    idx = []
    for u in U:
        k = names.get(u) if isinstance(u, str) else by_origin.get(int(u))
        if k is None:
            raise ValueError(f"{u!r} is not an interior vertex of the disk")
        idx.append(k)
    if not idx:
        raise ValueError("U must be nonempty")
    return _phi(D, idx)


# -- Jacobians ----------------------------------------------------------------------

def fd_jacobian(func: Callable[[np.ndarray], np.ndarray], x, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``func`` at ``x``."""
    x = np.asarray(x, float)
    if np.any(x + h == x) or np.any(x - h == x):
        raise StepError(f"step {h} vanishes relative to |x| = {np.max(np.abs(x))}")
    n = x.size
    cols = []
    for u in range(n):
        e = np.zeros(n)
        e[u] = h
        cols.append((func(x + e) - func(x - e)) / (2 * h))
    return np.column_stack(cols)


def curvature_jacobian(g: Geometry, T: CornerComplex, x, h: float = FD_STEP) -> np.ndarray:
    """J[v, u] = d(K_v o R_S)/dx_u."""
    return fd_jacobian(lambda y: curvature(g, T, inverse(g, y)), x, h)


def limit_jacobian(K: LimitCurvature, x, h: float = FD_STEP) -> np.ndarray:
    """Jacobian of K_Z in log-radius coordinates."""
    return fd_jacobian(lambda y: K(np.exp(y)), x, h)
