"""Combinatorial Ricci flow in x-coordinates and diagnostics of its limit.

The flow dx/dt = -K(R_S(x)) is the gradient flow of a convex potential, so
positivity of the radii is automatic and degeneration shows as some x_v
drifting to -infinity relative to the others.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .complex.decomposition import FULL, Decomposition
from .complex.triangulation import WeightedTriangulation
from .errors import BasepointError, PreconditionError, StiffnessError
from .geometry import Geometry, coordinates, curvature, inverse

LOG2 = math.log(2)


class Integrator(str, enum.Enum):
    RK4_FIXED = "RK4_FIXED"
    RK45_ADAPTIVE = "RK45_ADAPTIVE"


class Termination(str, enum.Enum):
    CONVERGED = "CONVERGED"
    DEGENERATING = "DEGENERATING"
    T_MAX = "T_MAX"


@dataclass(frozen=True)
class FlowOptions:
    t_max: float = 100.0
    curvature_tol: float = 1e-9
    dt_out: float | None = None          # linear stride; None means log-spaced samples
    samples_per_decade: int = 40
    integrator: Integrator = Integrator.RK45_ADAPTIVE
    h0: float = 1e-2
    rtol: float = 1e-10
    atol: float = 1e-12
    h_min: float = 1e-12
    x_low: float = -40.0

    def __post_init__(self):
        for name in ("t_max", "curvature_tol", "h0", "rtol", "atol", "h_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dt_out is not None and not self.dt_out > 0:
            raise ValueError("dt_out must be positive")

    def sample_times(self) -> np.ndarray:
        if self.dt_out is not None:
            n = int(math.floor(self.t_max / self.dt_out + 1e-9))
            t = self.dt_out * np.arange(1, n + 1)
        else:
            lo = min(1e-2, self.t_max)
            k = max(2, int(math.ceil(self.samples_per_decade * math.log10(self.t_max / lo))) + 1)
            t = np.geomspace(lo, self.t_max, k)
        t = t[t < self.t_max * (1 - 1e-12)]
        return np.concatenate([t, [self.t_max]])


@dataclass
class FlowTrace:
    geometry: Geometry
    vertices: tuple[str, ...]
    t: np.ndarray
    x: np.ndarray
    K: np.ndarray
    termination: Termination
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0
    note: str = ""

    @property
    def r(self) -> np.ndarray:
        return inverse(self.geometry, self.x)

    @property
    def knorm(self) -> np.ndarray:
        return np.linalg.norm(self.K, axis=1)

    @property
    def log_product(self) -> np.ndarray:
        """log prod r_v (Euclidean); conserved along the exact flow."""
        return np.log(self.r).sum(axis=1)

    def conservation_error(self) -> np.ndarray:
        lp = self.log_product
        return np.abs(lp - lp[0])

    def knorm_increase(self) -> float:
        """Largest increase of |K| between consecutive samples."""
        kn = self.knorm
        return float(np.max(np.diff(kn), initial=0.0))

    def psi_increments(self) -> np.ndarray:
        """Trapezoidal <K, dx> over each sample interval; the potential decreases."""
        dx = np.diff(self.x, axis=0)
        km = (self.K[1:] + self.K[:-1]) / 2
        return np.einsum("ij,ij->i", km, dx)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.vertices)
        w.writerow(["t"] + [f"x_{v}" for v in names] + [f"r_{v}" for v in names]
                   + [f"K_{v}" for v in names] + ["Knorm"])
        r = self.r
        kn = self.knorm
        fmt = lambda v: format(float(v), ".17g")
        for k in range(len(self.t)):
            w.writerow([fmt(self.t[k])] + [fmt(v) for v in self.x[k]] + [fmt(v) for v in r[k]]
                       + [fmt(v) for v in self.K[k]] + [fmt(kn[k])])
        buf.write(f"# termination: {self.termination.value}\n")
        return buf.getvalue()


# -- integrators ----------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class _Stepper:
    """Advances dx/dt = f(x) and reports the curvature at every accepted point."""

    def __init__(self, f: Callable[[np.ndarray], np.ndarray], opts: FlowOptions):
        self.f = f
        self.opts = opts
        self.evaluations = 0
        self.steps = 0
        self.rejected = 0

    def rhs(self, x):
        self.evaluations += 1
        return self.f(x)

    def rk4(self, x, fx, h):
        k1 = fx
        k2 = self.rhs(x + h / 2 * k1)
        k3 = self.rhs(x + h / 2 * k2)
        k4 = self.rhs(x + h * k3)
        x_new = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        self.steps += 1
        return x_new, self.rhs(x_new)

    def dopri(self, x, fx, h):
        """One attempted step; returns (x_new, f(x_new), err_norm)."""
        o = self.opts
        k = [fx]
        for s in range(1, 7):
            xs = x + h * sum(a * k[j] for j, a in enumerate(_A[s]) if a)
            k.append(self.rhs(xs))
        x_new = x + h * sum(b * k[j] for j, b in enumerate(_B5) if b)
        err = h * sum(e * k[j] for j, e in enumerate(_E))
        scale = o.atol + o.rtol * np.maximum(np.abs(x), np.abs(x_new))
        return x_new, k[6], float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate(g: Geometry, T: WeightedTriangulation, r0=None,
              opts: FlowOptions | None = None) -> FlowTrace:
    """Integrate the flow from ``r0`` (all ones by default) up to ``opts.t_max``."""
    opts = opts or FlowOptions()
    n = T.n_vertices
    r0 = np.ones(n) if r0 is None else np.asarray(r0, float)
    x = coordinates(g, r0)

    def K_of(y):
        return curvature(g, T, inverse(g, y))

    stepper = _Stepper(lambda y: -K_of(y), opts)
    fx = stepper.rhs(x)
    ts, xs, Ks = [0.0], [x.copy()], [-fx]
    t = 0.0
    termination = None
    note = ""
    if np.linalg.norm(fx) < opts.curvature_tol:
        termination = Termination.CONVERGED

    h = opts.h0
    for t_out in ([] if termination else opts.sample_times()):
        while t < t_out:
            step = min(h, t_out - t)
            if opts.integrator is Integrator.RK4_FIXED:
                x, fx = stepper.rk4(x, fx, step)
                t = t_out if step == t_out - t else t + step
            else:
                x_new, f_new, err = stepper.dopri(x, fx, step)
                if not np.isfinite(err) or err > 1.0:
                    stepper.rejected += 1
                    fac = 0.2 if not np.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
                    h = step * fac
                    if h < opts.h_min:
                        raise StiffnessError(f"step size {h:.3g} below {opts.h_min:g} at t={t:.6g}")
                    continue
                stepper.steps += 1
                t = t_out if step == t_out - t else t + step
                x, fx = x_new, f_new
                grow = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                # keep the controller's step when only clipped by a sample time
                h = max(h, step * grow) if step < h else step * grow
            if np.linalg.norm(fx) < opts.curvature_tol:
                termination = Termination.CONVERGED
                break
            if np.min(x - np.max(x)) < opts.x_low:
                termination = Termination.DEGENERATING
                note = "relative coordinate gap below x_low"
                break
        ts.append(t)
        xs.append(x.copy())
        Ks.append(-fx)
        if termination:
            break

    trace = FlowTrace(g, tuple(T.vertices), np.array(ts), np.array(xs), np.array(Ks),
                      termination or Termination.T_MAX, stepper.steps, stepper.rejected,
                      stepper.evaluations, note)
    if termination is None and _looks_degenerating(trace):
        trace.termination = Termination.DEGENERATING
        trace.note = "relative gaps still opening over the last decade while |K| decreases"
    return trace


def _decade(t: np.ndarray) -> np.ndarray:
    """Indices of samples in the last decade [t_end / 10, t_end]."""
    return np.flatnonzero(t >= t[-1] / 10)


def _looks_degenerating(trace: FlowTrace) -> bool:
    idx = _decade(trace.t)
    if len(idx) < 2 or trace.t[idx[0]] <= 0:
        return False
    gaps = trace.x - trace.x.max(axis=1, keepdims=True)
    drop = gaps[idx[0]] - gaps[idx[-1]]
    kn = trace.knorm
    return bool(np.max(drop) > LOG2 and kn[idx[-1]] < kn[idx[0]])


# -- ratio limits --------------------------------------------------------------------

@dataclass(frozen=True)
class RatioEstimate:
    basepoint: str
    t: np.ndarray
    curves: dict[str, np.ndarray]
    estimate: dict[str, float]
    spread: dict[str, float]


def ratios(trace: FlowTrace, basepoint, dec: Decomposition | None = None) -> RatioEstimate:
    """rho_u(t) = r_u / r_base (Euclidean) or r_u (hyperbolic), with last-decade spreads."""
    names = list(trace.vertices)
    b = names.index(basepoint) if isinstance(basepoint, str) else int(basepoint)
    if dec is not None and b not in dec.levels[0]:
        raise BasepointError(f"basepoint {names[b]!r} is not in the surviving level V_0")
    r = trace.r
    rho = r / r[:, [b]] if trace.geometry is Geometry.EUCLIDEAN else r
    idx = _decade(trace.t)
    curves = {v: rho[:, k] for k, v in enumerate(names)}
    est = {v: float(rho[-1, k]) for k, v in enumerate(names)}
    spread = {v: float(np.max(np.abs(rho[idx, k] - rho[-1, k]))) for k, v in enumerate(names)}
    return RatioEstimate(names[b], trace.t, curves, est, spread)


# -- limit diagnostics ---------------------------------------------------------------

@dataclass
class CheckEntry:
    condition: str
    element: str
    value: float
    spread: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value < self.tol)

    def to_json(self) -> dict:
        return {"condition": self.condition, "element": self.element, "value": self.value,
                "spread": self.spread, "tol": self.tol, "passed": self.passed}


@dataclass
class OrderReport:
    entries: list[CheckEntry] = field(default_factory=list)
    termination: str = ""

    def condition_passed(self, name: str) -> bool:
        return all(e.passed for e in self.entries if e.condition == name)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_json(self) -> dict:
        return {"termination": self.termination, "passed": self.passed,
                "conditions": {c: self.condition_passed(c) for c in ("a", "b", "c")},
                "entries": [e.to_json() for e in self.entries]}


def _rstar_vector(trace: FlowTrace, rstar) -> np.ndarray:
    if isinstance(rstar, dict):
        return np.array([rstar[v] for v in trace.vertices], float)
    if hasattr(rstar, "vector"):
        return np.asarray(rstar.vector, float)
    return np.asarray(rstar, float)


def degeneration_order_check(trace: FlowTrace, dec: Decomposition | None, rstar,
                             tol: float = 1e-3) -> OrderReport:
    """The three conditions for degenerating of order r*, at the final sample.

    (a) r_u / r_v -> 0 for u in U' and v in V_U;
    (b) ratios inside each V_U approach those of r*;
    (c) on V_0, radii approach r* (hyperbolic) or r* up to scale (Euclidean).
    Each value carries its spread over the last decade of samples.
    """
    if dec is None:
        raise PreconditionError("no critical subsets: the flow converges and cannot degenerate")
    rs = _rstar_vector(trace, rstar)
    r = trace.r
    idx = _decade(trace.t)
    rep = OrderReport(termination=trace.termination.value)

    def entry(cond, label, series):
        series = np.asarray(series)
        rep.entries.append(CheckEntry(cond, label, float(series[-1]),
                                      float(np.max(np.abs(series[idx] - series[-1]))), tol))

    for label, el in dec.elements.items():
        core = sorted(el.core)
        inner = sorted(el.prime)
        if inner:
            # largest collapsing ratio
            worst = np.max(r[:, inner], axis=1) / np.min(r[:, core], axis=1)
            entry("a", label, worst)
        if len(core) > 1:
            ref = core[0]
            dev = np.max(np.abs((r[:, core] / r[:, [ref]]) / (rs[core] / rs[ref]) - 1), axis=1)
            entry("b", label, dev)
    core0 = sorted(dec.levels[0])
    if trace.geometry is Geometry.EUCLIDEAN:
        ref = core0[0]
        dev = np.max(np.abs((r[:, core0] / r[:, [ref]]) / (rs[core0] / rs[ref]) - 1), axis=1)
    else:
        dev = np.max(np.abs(r[:, core0] / rs[core0] - 1), axis=1)
    entry("c", FULL, dev)
    return rep


@dataclass
class AGSReport:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: float

    @property
    def max_violation(self) -> float:
        return float(np.max(self.lhs - self.rhs, initial=-math.inf))

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.slack

    def to_json(self) -> dict:
        return {"samples": int(len(self.t)), "max_violation": self.max_violation,
                "slack": self.slack, "passed": self.passed,
                "final_lhs": float(self.lhs[-1]) if len(self.lhs) else None,
                "final_rhs": float(self.rhs[-1]) if len(self.rhs) else None}


def comparison_radii(level_of: Sequence[int], rstar, tau: float) -> np.ndarray:
    """tau^{-n(u)} r*_u, the radii of the comparison curve x*(tau)."""
    return np.asarray(rstar, float) * tau ** (-np.asarray(level_of, float))


def ags_bound_check(trace: FlowTrace, dec: Decomposition | None, rstar, T: WeightedTriangulation,
                    slack: float = 1e-6) -> AGSReport:
    """|K(x(tau))|^2 <= |K(x*(tau))|^2 + |x*(tau) - x(0)|^2 / tau^2 at every sample.

    When the comparison radii are too large for hyperbolic trigonometry in
    binary64 (only for tau << 1) the nonnegative |K(x*)|^2 term is dropped,
    which can only make the check stricter.
    """
    g = trace.geometry
    rs = _rstar_vector(trace, rstar)
    levels = dec.level_of if dec is not None else [0] * len(rs)
    keep = trace.t > 0
    lhs = trace.knorm[keep] ** 2
    rhs = []
    for tau in trace.t[keep]:
        radii = comparison_radii(levels, rs, tau)
        xs = coordinates(g, radii)
        dist = np.sum((xs - trace.x[0]) ** 2) / tau ** 2
        if g is Geometry.HYPERBOLIC and np.max(radii) > 300:
            rhs.append(dist)
            continue
        Ks = curvature(g, T, radii)
        rhs.append(Ks @ Ks + dist)
    return AGSReport(trace.t[keep], lhs, np.array(rhs), slack)
