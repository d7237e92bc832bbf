"""Independent oracles for the identities the library relies on.

Nothing here reuses the traversal or trigonometry of the modules it checks:
corners are re-derived from the raw face records, and angles use the plain
arccos law of cosines instead of the half-angle form.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .complex.decomposition import Decomposition, decompose
from .complex.subsets import Verdict, classify, connected_subsets
from .complex.subsets import phi as complex_phi
from .complex.triangulation import WeightedTriangulation
from .geometry import Geometry, LimitCurvature, QuotientCurvature, curvature

THREADS_ENV = "RICCI_PATTERNS_THREADS"


@dataclass
class CheckResult:
    passed: bool
    max_deviation: float
    samples: int
    detail: str = ""

    def to_json(self) -> dict:
        return {"passed": self.passed, "max_deviation": self.max_deviation,
                "samples": self.samples, "detail": self.detail}


@dataclass
class OracleReport:
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def merge(self, other: "OracleReport", prefix: str = "") -> None:
        for k, v in other.checks.items():
            self.checks[prefix + k] = v

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": {k: v.to_json() for k, v in self.checks.items()}}


# -- raw combinatorics ---------------------------------------------------------------

def _corners(T: WeightedTriangulation) -> list[list[int]]:
    """Corner vertices per face, re-derived from the directed edge records."""
    out = []
    for face in T.faces:
        row = []
        for e, sign in face:
            a, b = T.edges[e].ends
            row.append(a if sign > 0 else b)
        out.append(row)
    return out


def oracle_phi(T: WeightedTriangulation, U: Iterable) -> float:
    """phi(U) from an explicit cell list of the sub-complex and a corner scan."""
    U = set(T.resolve(U))
    corners = _corners(T)
    n_vertices = len(U)
    n_edges = sum(1 for e in T.edges if e.ends[0] in U and e.ends[1] in U)
    n_faces = sum(1 for row in corners if all(v in U for v in row))
    chi = n_vertices - n_edges + n_faces
    link_sum = 0.0
    for face, row in zip(T.faces, corners):
        hits = [i for i, v in enumerate(row) if v in U]
        if len(hits) == 1:
            i = hits[0]
            opposite = face[(i + 1) % 3][0]
            link_sum += math.pi - T.edges[opposite].weight
    return -link_sum + 2 * math.pi * chi


# -- law-of-cosines trigonometry ---------------------------------------------------

def _cos_length(g: Geometry, ra: float, rb: float, theta: float) -> float:
    if g is Geometry.EUCLIDEAN:
        return math.sqrt(ra * ra + rb * rb + 2 * ra * rb * math.cos(theta))
    arg = math.cosh(ra) * math.cosh(rb) + math.sinh(ra) * math.sinh(rb) * math.cos(theta)
    return math.acosh(max(arg, 1.0))


def _cos_angle(g: Geometry, a: float, b: float, c: float) -> float:
    """Angle opposite side a."""
    if g is Geometry.EUCLIDEAN:
        cos = (b * b + c * c - a * a) / (2 * b * c)
    else:
        cos = (math.cosh(b) * math.cosh(c) - math.cosh(a)) / (math.sinh(b) * math.sinh(c))
    return math.acos(min(1.0, max(-1.0, cos)))


def oracle_triangle(g: Geometry, r: Sequence[float], theta: Sequence[float]) -> list[float]:
    """Angles at the three circles; ``theta[i]`` is the weight opposite corner i."""
    sides = [_cos_length(g, r[(i + 1) % 3], r[(i + 2) % 3], theta[i]) for i in range(3)]
    return [_cos_angle(g, sides[i], sides[(i + 1) % 3], sides[(i + 2) % 3]) for i in range(3)]


def oracle_curvature(g: Geometry, T: WeightedTriangulation, r) -> np.ndarray:
    r = np.asarray(r, float)
    K = np.full(T.n_vertices, 2 * math.pi)
    for face, row in zip(T.faces, _corners(T)):
        theta = [T.edges[face[(i + 1) % 3][0]].weight for i in range(3)]
        for v, a in zip(row, oracle_triangle(g, [r[v] for v in row], theta)):
            K[v] -= a
    return K


def _sigma(g: Geometry, r: float) -> float:
    return r if g is Geometry.EUCLIDEAN else math.sinh(r)


def oracle_fd_symmetry(g: Geometry, T: WeightedTriangulation, r, seed: int = 0,
                       samples: int = 20, h: float = 1e-5, tol: float = 1e-6) -> OracleReport:
    """Per-face check of sigma-weighted derivative symmetry and the sign pattern.

    The face data are evaluated at ``r`` and at ``samples`` log-normal
    perturbations of it drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    base = np.asarray(r, float)
    metrics = [base] + [base * np.exp(rng.normal(scale=0.5, size=base.size))
                        for _ in range(samples)]
    corners = _corners(T)
    sym = 0.0
    diag, off = -math.inf, math.inf
    diag_ok = off_ok = True
    count = 0
    for rr in metrics:
        for face, row in zip(T.faces, corners):
            theta = [T.edges[face[(i + 1) % 3][0]].weight for i in range(3)]
            r3 = [rr[v] for v in row]
            D = np.zeros((3, 3))  # D[i, j] = d theta_i / d r_j
            for j in range(3):
                step = h * r3[j]
                up, dn = list(r3), list(r3)
                up[j] += step
                dn[j] -= step
                D[:, j] = (np.array(oracle_triangle(g, up, theta))
                           - np.array(oracle_triangle(g, dn, theta))) / (2 * step)
            s = np.array([_sigma(g, x) for x in r3])
            W = D * s[None, :]
            sym = max(sym, float(np.max(np.abs(W - W.T))))
            diag = max(diag, float(np.max(np.diag(D))))
            mask = ~np.eye(3, dtype=bool)
            off = min(off, float(np.min(D[mask])))
            diag_ok &= bool(np.all(np.diag(D) < 0))
            off_ok &= bool(np.all(D[mask] > 0))
            count += 1
    rep = OracleReport()
    rep.checks["angle_symmetry"] = CheckResult(sym < tol, sym, count)
    rep.checks["diagonal_negative"] = CheckResult(diag_ok, diag, count,
                                                  "largest d theta_i / d r_i")
    rep.checks["offdiagonal_positive"] = CheckResult(off_ok, off, count,
                                                     "smallest d theta_i / d r_j")
    return rep


def oracle_degenerate_curve(T: WeightedTriangulation, dec: Decomposition, rstar,
                            times: Sequence[float] = (1e1, 1e2, 1e3, 1e4),
                            tol: float = 1e-3) -> OracleReport:
    """Curvature along r_u(t) = t^{-n(u)} r*_u against the blockwise limits.

    Limits are K_Z(r*) on V_Z and the quotient curvature on V_0; the gap must
    shrink monotonically and end below ``tol``.
    """
    g = Geometry.of(T)
    rs = np.asarray(getattr(rstar, "vector", rstar), float)
    n = np.asarray(dec.level_of, float)
    target = np.full(T.n_vertices, np.nan)
    Kv = QuotientCurvature(T, dec, g)
    target[Kv.order] = Kv(rs[Kv.order])
    for el in dec.critical:
        K = LimitCurvature(T, dec, el.label)
        target[K.order] = K(rs[K.order])
    gaps = []
    for t in times:
        K = oracle_curvature(g, T, rs * float(t) ** (-n))
        gaps.append(float(np.max(np.abs(K - target))))
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    rep = OracleReport()
    rep.checks["degenerate_curve_gap"] = CheckResult(
        monotone and gaps[-1] < tol, gaps[-1], len(times),
        "gaps " + ", ".join(f"{x:.3e}" for x in gaps))
    rep.checks["limit_values_vanish"] = CheckResult(
        float(np.max(np.abs(target))) < tol, float(np.max(np.abs(target))), T.n_vertices,
        "blockwise limit curvature at r*")
    return rep


# -- battery -----------------------------------------------------------------------

def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _phi_check(T: WeightedTriangulation, seed: int, limit: int = 500) -> CheckResult:
    subsets = list(connected_subsets(T))
    if len(subsets) > limit:
        rng = np.random.default_rng(seed)
        pick = sorted(rng.choice(len(subsets), size=limit, replace=False))
        subsets = [subsets[k] for k in pick]
    dev = max((abs(complex_phi(T, U) - oracle_phi(T, U)) for U in subsets), default=0.0)
    return CheckResult(dev < 1e-12, dev, len(subsets))


def _gauss_bonnet(T: WeightedTriangulation, seed: int, samples: int = 100) -> CheckResult:
    """Euclidean: sum K = 0.  Hyperbolic: sum K - 2 pi chi is the total area, so positive."""
    g = Geometry.of(T)
    rng = np.random.default_rng(seed)
    dev = 0.0
    ok = True
    for _ in range(samples):
        total = float(curvature(g, T, np.exp(rng.normal(size=T.n_vertices))).sum())
        excess = total - 2 * math.pi * T.chi
        if g is Geometry.EUCLIDEAN:
            dev = max(dev, abs(excess))
        else:
            ok &= excess > 0
    if g is Geometry.EUCLIDEAN:
        ok = dev < 1e-10
    return CheckResult(ok, dev, samples)


def _curvature_agreement(T: WeightedTriangulation, seed: int, samples: int = 20) -> CheckResult:
    g = Geometry.of(T)
    rng = np.random.default_rng(seed + 1)
    dev = 0.0
    for _ in range(samples):
        r = np.exp(rng.normal(size=T.n_vertices))
        dev = max(dev, float(np.max(np.abs(curvature(g, T, r) - oracle_curvature(g, T, r)))))
    return CheckResult(dev < 1e-9, dev, samples, "half-angle vs law of cosines")


def run_battery(T: WeightedTriangulation, seed: int = 0, r=None,
                threads: int | None = None) -> OracleReport:
    """Every oracle that applies to ``T``; deterministic for a given seed."""
    from .solver import assemble_rstar  # local import keeps the oracle layer light

    g = Geometry.of(T)
    r = np.ones(T.n_vertices) if r is None else np.asarray(r, float)
    jobs: list[tuple[str, Callable[[], OracleReport | CheckResult]]] = [
        ("phi_oracle", lambda: _phi_check(T, seed)),
        ("gauss_bonnet", lambda: _gauss_bonnet(T, seed)),
        ("curvature_oracle", lambda: _curvature_agreement(T, seed)),
        ("fd_", lambda: oracle_fd_symmetry(g, T, r, seed)),
    ]
    report = classify(T)
    if report.verdict is Verdict.CRITICAL:
        def curve():
            dec = decompose(T, report)
            return oracle_degenerate_curve(T, dec, assemble_rstar(T, dec))
        jobs.append(("", curve))
    workers = threads or thread_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda job: job[1](), jobs))
    out = OracleReport()
    for (name, _), res in zip(jobs, results):
        if isinstance(res, OracleReport):
            out.merge(res, prefix=name)
        else:
            out.checks[name] = res
    return out
