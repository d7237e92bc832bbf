"""Newton solves for circle pattern metrics, limit metrics and the order r*."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .complex.decomposition import FULL, Decomposition
from .complex.subsets import SubsetReport, Verdict, classify
from .complex.triangulation import WeightedTriangulation
from .errors import NoConvergence, PreconditionError, RicciPatternsError
from .geometry import (FD_STEP, Geometry, LimitCurvature, QuotientCurvature, coordinates,
                       curvature, fd_jacobian, inverse)


MAX_STEP = 4.0


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-11
    max_iter: int = 100
    backtrack: float = 0.5
    max_halvings: int = 40
    fd_step: float = FD_STEP

    def __post_init__(self):
        if not (self.tol > 0 and self.fd_step > 0 and 0 < self.backtrack < 1):
            raise ValueError("solver tolerances must be positive and 0 < backtrack < 1")


@dataclass(frozen=True)
class SolveResult:
    vertices: tuple[int, ...]
    r: np.ndarray
    residual: float
    iterations: int
    normalized: bool


def newton(F: Callable[[np.ndarray], np.ndarray], x0, opts: SolveOptions,
           centred: bool, gradient: bool = False) -> tuple[np.ndarray, float, int]:
    """Damped Newton on F(x) = 0 with a finite-difference Jacobian.

    With ``centred`` the iterate stays on sum(x) = 0 and the Jacobian's kernel
    along (1, ..., 1) is filled by the rank-one term 11^T / n.

    With ``gradient`` F is the gradient of a convex potential: a trial step is
    also accepted when <F(y), d> <= 0, which guarantees the potential drops
    even where |F| saturates, and steps are capped at ``MAX_STEP`` per entry.
    """
    x = np.asarray(x0, float).copy()
    if centred:
        x -= x.mean()
    n = x.size

    def safe(y):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                v = F(y)
        except RicciPatternsError:
            return None
        return v if np.all(np.isfinite(v)) else None

    f = safe(x)
    if f is None:
        raise NoConvergence("residual undefined at the starting point", x, math.inf, 0)
    best = (x.copy(), float(np.max(np.abs(f))))
    for it in range(opts.max_iter + 1):
        res = float(np.max(np.abs(f)))
        if res < best[1]:
            best = (x.copy(), res)
        if res < opts.tol:
            return x, res, it
        if it == opts.max_iter:
            break
        J = fd_jacobian(F, x, opts.fd_step)
        A = J + np.ones((n, n)) / n if centred else J
        try:
            d = np.linalg.solve(A, -f)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(A, -f, rcond=None)[0]
        if centred:
            d -= d.mean()
        if gradient:
            d *= min(1.0, MAX_STEP / max(np.max(np.abs(d)), 1e-300))
        norm0 = np.linalg.norm(f)
        alpha = 1.0
        for _ in range(opts.max_halvings + 1):
            y = x + alpha * d
            if centred:
                y -= y.mean()
            fy = safe(y)
            if fy is not None and (np.linalg.norm(fy) < norm0 or (gradient and fy @ d <= 0)):
                break
            alpha *= opts.backtrack
        else:
            raise NoConvergence(f"line search failed at iteration {it} (residual {res:.3g})",
                                best[0], best[1], it)
        x, f = y, fy
    raise NoConvergence(f"no convergence in {opts.max_iter} iterations (residual {best[1]:.3g})",
                        best[0], best[1], opts.max_iter)


def solve_circle_pattern(g: Geometry, T: WeightedTriangulation, opts: SolveOptions | None = None,
                         report: SubsetReport | None = None, x0=None) -> SolveResult:
    """The circle pattern metric; Euclidean results lie on prod r = 1."""
    opts = opts or SolveOptions()
    report = report or classify(T)
    if report.verdict is not Verdict.SUBCRITICAL:
        raise PreconditionError(f"no circle pattern metric: input is {report.verdict.value}")
    n = T.n_vertices
    centred = g is Geometry.EUCLIDEAN
    F = lambda y: curvature(g, T, inverse(g, y))
    if x0 is None:
        x0 = coordinates(g, np.ones(n))
    if centred and n == 1:
        x, res, it = np.zeros(1), float(np.max(np.abs(F(np.zeros(1))))), 0
        if res >= opts.tol:
            raise NoConvergence("single-vertex torus is not flat", x, res, 0)
    else:
        x, res, it = newton(F, x0, opts, centred, gradient=True)
    return SolveResult(tuple(range(n)), inverse(g, x), res, it, centred)


def solve_limit_metric(T: WeightedTriangulation, dec: Decomposition, Z,
                       opts: SolveOptions | None = None, x0=None,
                       K: LimitCurvature | None = None) -> SolveResult:
    """The unique r on P_Z (prod r = 1) with K_Z(r) = 0."""
    opts = opts or SolveOptions()
    K = K or LimitCurvature(T, dec, Z)
    n = len(K.order)
    F = lambda y: K(np.exp(y))
    if n == 1:
        x = np.zeros(1)
        res = float(np.max(np.abs(F(x))))
        if res >= opts.tol:
            raise NoConvergence("singleton block has nonzero limit curvature", x, res, 0)
        it = 0
    else:
        x, res, it = newton(F, np.zeros(n) if x0 is None else x0, opts, centred=True,
                            gradient=True)
    return SolveResult(tuple(K.order), np.exp(x), res, it, True)


@dataclass
class RStar:
    vertices: tuple[str, ...]
    vector: np.ndarray
    blocks: dict[str, SolveResult] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {v: float(x) for v, x in zip(self.vertices, self.vector)}

    def to_json(self) -> dict:
        return {
            "blocks": [{"element": label,
                        "vertices": [self.vertices[v] for v in b.vertices],
                        "r": [float(x) for x in b.r],
                        "residual": b.residual,
                        "iterations": b.iterations}
                       for label, b in self.blocks.items()],
            "rstar": self.as_dict(),
        }


def assemble_rstar(T: WeightedTriangulation, dec: Decomposition,
                   opts: SolveOptions | None = None) -> RStar:
    """Blockwise limit metrics plus the circle pattern metric of the quotient."""
    opts = opts or SolveOptions()
    g = Geometry.of(T)
    vec = np.full(T.n_vertices, np.nan)
    blocks: dict[str, SolveResult] = {}
    Kv = QuotientCurvature(T, dec, g)
    top = solve_circle_pattern(g, Kv.quotient, opts)
    blocks[FULL] = SolveResult(tuple(Kv.order), top.r, top.residual, top.iterations,
                               top.normalized)
    for el in dec.critical:
        blocks[el.label] = solve_limit_metric(T, dec, el.label, opts)
    for b in blocks.values():
        vec[list(b.vertices)] = b.r
    if np.any(np.isnan(vec)):
        raise PreconditionError("blocks do not cover every vertex")
    return RStar(tuple(T.vertices), vec, blocks)
