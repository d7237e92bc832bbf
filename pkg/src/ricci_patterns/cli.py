"""Command-line front end: ``ricci-patterns <command> --input FILE``."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from .complex.decomposition import decompose
from .complex.subsets import Verdict, classify
from .complex.triangulation import WeightedTriangulation, parse_triangulation
from .errors import (DomainError, InternalError, NoConvergence, PreconditionError,
                     RicciPatternsError, SchemaError, StepError, StiffnessError)
from .flow import (FlowOptions, FlowTrace, ags_bound_check, degeneration_order_check,
                   integrate, ratios)
from .geometry import Geometry
from .solver import RStar, SolveOptions, assemble_rstar, solve_circle_pattern
from .verify import run_battery

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INTEGRATOR = 2
EXIT_SOLVER = 3
EXIT_CHECKS = 4
VERDICT_EXIT = {Verdict.SUBCRITICAL: 0, Verdict.CRITICAL: 10, Verdict.SUPERCRITICAL: 20}


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Path
    out_dir: Path
    t_max: float | None
    tol: float | None
    seed: int
    plot: bool
    r0: Path | None = None

    def flow_options(self) -> FlowOptions:
        opts = FlowOptions(t_max=1e4)
        if self.t_max is not None:
            opts = replace(opts, t_max=self.t_max)
        if self.tol is not None:
            opts = replace(opts, curvature_tol=self.tol)
        return opts

    def solve_options(self) -> SolveOptions:
        return SolveOptions(tol=self.tol) if self.tol is not None else SolveOptions()


class Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(cfg: RunConfig) -> WeightedTriangulation:
    try:
        text = cfg.input.read_text(encoding="utf-8")
    except OSError as exc:
        raise Failure(EXIT_ERROR, f"cannot read {cfg.input}: {exc.strerror}") from None
    return parse_triangulation(text, name=cfg.input.stem)


def _write_json(cfg: RunConfig, name: str, payload) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n", encoding="utf-8")
    return path


def _write_text(cfg: RunConfig, name: str, text: str) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def _plot(cfg: RunConfig, trace: FlowTrace, name: str = "flow.svg") -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ricci-patterns"
    t = trace.t
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
    keep = t > 0
    for k, v in enumerate(trace.vertices):
        ax1.plot(t[keep], trace.x[keep, k], lw=1, label=v)
    ax1.set_xscale("log")
    ax1.set_ylabel("x_v")
    if len(trace.vertices) <= 16:
        ax1.legend(fontsize=7, ncol=2)
    kn = trace.knorm[keep]
    ax2.plot(t[keep], np.where(kn > 0, kn, np.nan), color="k", lw=1)
    ax2.set_yscale("log")
    ax2.set_xlabel("t")
    ax2.set_ylabel("|K|")
    fig.suptitle(f"termination: {trace.termination.value}")
    fig.tight_layout()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / name
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# -- commands ----------------------------------------------------------------------

def cmd_validate(cfg: RunConfig) -> int:
    T = _load(cfg)
    summary = {"vertices": len(T.vertices), "edges": len(T.edges), "faces": len(T.faces),
               "chi": T.chi, "genus": T.genus, "geometry": Geometry.of(T).value}
    _write_json(cfg, "validation.json", summary)
    click.echo(f"valid: chi={T.chi}, {Geometry.of(T).value.lower()}, |V|={len(T.vertices)}")
    return EXIT_OK


def cmd_analyze(cfg: RunConfig) -> int:
    T = _load(cfg)
    report = classify(T)
    payload = {"input": cfg.input.name, "chi": T.chi, "geometry": Geometry.of(T).value,
               "subsets": report.to_json(T)}
    if report.verdict is Verdict.CRITICAL:
        payload["decomposition"] = decompose(T, report).to_json(T)
    _write_json(cfg, "report.json", payload)
    click.echo(f"verdict: {report.verdict.value} (max phi = {report.max_phi:.6g})")
    return VERDICT_EXIT[report.verdict]


def _initial_metric(cfg: RunConfig, T: WeightedTriangulation):
    """All ones, or a JSON object mapping every vertex name to a positive radius."""
    if cfg.r0 is None:
        return None
    try:
        data = json.loads(cfg.r0.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise SchemaError(f"cannot read initial metric {cfg.r0}: {exc}") from None
    if not isinstance(data, dict) or set(data) != set(T.vertices):
        raise SchemaError("initial metric must map every vertex name to a radius")
    r = np.array([data[v] for v in T.vertices], float)
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise SchemaError("initial radii must be finite and positive")
    return r


def _run_flow(cfg: RunConfig, T: WeightedTriangulation, code: int = EXIT_INTEGRATOR) -> FlowTrace:
    r0 = _initial_metric(cfg, T)
    try:
        return integrate(Geometry.of(T), T, r0, cfg.flow_options())
    except (StiffnessError, StepError, DomainError, InternalError) as exc:
        raise Failure(code, f"integrator failed: {type(exc).__name__}: {exc}") from None


def cmd_flow(cfg: RunConfig) -> int:
    T = _load(cfg)
    trace = _run_flow(cfg, T)
    _write_text(cfg, "trace.csv", trace.to_csv())
    if cfg.plot:
        _plot(cfg, trace)
    click.echo(f"termination: {trace.termination.value} at t={trace.t[-1]:.6g}, "
               f"|K|={trace.knorm[-1]:.3e}")
    return EXIT_OK


def _solve(cfg: RunConfig, T: WeightedTriangulation, report) -> RStar:
    opts = cfg.solve_options()
    try:
        if report.verdict is Verdict.SUBCRITICAL:
            g = Geometry.of(T)
            res = solve_circle_pattern(g, T, opts, report)
            return RStar(tuple(T.vertices), res.r, {"V": res})
        return assemble_rstar(T, decompose(T, report), opts)
    except NoConvergence as exc:
        raise Failure(EXIT_SOLVER, f"solver failed: {exc}") from None


def cmd_solve(cfg: RunConfig) -> int:
    T = _load(cfg)
    report = classify(T)
    if report.verdict is Verdict.SUPERCRITICAL:
        raise PreconditionError("SUPERCRITICAL input has neither a circle pattern metric "
                                "nor a degeneration order")
    rs = _solve(cfg, T, report)
    _write_json(cfg, "solve.json", rs.to_json())
    worst = max(b.residual for b in rs.blocks.values())
    click.echo(f"solved {len(rs.blocks)} block(s), max residual {worst:.3e}")
    return EXIT_OK


def cmd_limit(cfg: RunConfig) -> int:
    T = _load(cfg)
    report = classify(T)
    if report.verdict is not Verdict.CRITICAL:
        raise PreconditionError(f"limit needs a CRITICAL input, got {report.verdict.value}")
    dec = decompose(T, report)
    partial = {"decomposition": dec.to_json(T)}
    try:
        rs = _solve(cfg, T, report)
        _write_json(cfg, "rstar.json", rs.to_json())
        partial["rstar"] = rs.to_json()
        trace = _run_flow(cfg, T, code=EXIT_SOLVER)
    except Failure as exc:
        partial["error"] = str(exc)
        _write_json(cfg, "limit_report.json", partial)
        raise
    _write_text(cfg, "trace.csv", trace.to_csv())
    if cfg.plot:
        _plot(cfg, trace)
    order = degeneration_order_check(trace, dec, rs)
    ags = ags_bound_check(trace, dec, rs, T)
    base = T.vertices[min(dec.levels[0])]
    rho = ratios(trace, base, dec)
    payload = {
        "termination": trace.termination.value,
        "t_final": float(trace.t[-1]),
        "knorm_final": float(trace.knorm[-1]),
        "ratios": {"basepoint": rho.basepoint, "estimate": rho.estimate, "spread": rho.spread},
        "order_check": order.to_json(),
        "ags": ags.to_json(),
        "rstar": rs.to_json(),
        "decomposition": partial["decomposition"],
    }
    _write_json(cfg, "limit_report.json", payload)
    ok = order.passed and ags.passed
    click.echo(f"order check {'passed' if order.passed else 'FAILED'}, "
               f"AGS bound {'passed' if ags.passed else 'FAILED'}")
    return EXIT_OK if ok else EXIT_CHECKS


def cmd_verify(cfg: RunConfig) -> int:
    T = _load(cfg)
    rep = run_battery(T, seed=cfg.seed)
    _write_json(cfg, "oracle_report.json", rep.to_json())
    for name, c in rep.checks.items():
        click.echo(f"{'PASS' if c.passed else 'FAIL'} {name}: {c.max_deviation:.3e}")
    return EXIT_OK if rep.passed else EXIT_CHECKS


COMMANDS = {"validate": cmd_validate, "analyze": cmd_analyze, "flow": cmd_flow,
            "solve": cmd_solve, "limit": cmd_limit, "verify": cmd_verify}


def dispatch(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.command](cfg)
    except Failure as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.code
    except NoConvergence as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_SOLVER
    except RicciPatternsError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_ERROR


def _options(f):
    f = click.option("--r0", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="JSON object of initial radii by vertex name.")(f)
    f = click.option("--plot", is_flag=True, help="Write an SVG of the flow history.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=None,
                     help="Curvature tolerance (flow) or residual tolerance (solve).")(f)
    f = click.option("--t-max", type=click.FloatRange(min=0, min_open=True), default=None,
                     help="Flow end time (default 1e4).")(f)
    f = click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path),
                     default=Path("."), show_default=True)(f)
    f = click.option("--input", "input_", required=True,
                     type=click.Path(dir_okay=False, path_type=Path))(f)
    return f


@click.group()
def main():
    """Circle patterns, combinatorial Ricci flow and degenerate limits."""


def _make(name: str, doc: str):
    @main.command(name=name, help=doc)
    @_options
    def command(input_, out_dir, t_max, tol, seed, plot, r0):
        cfg = RunConfig(name, input_, out_dir, t_max, tol, seed, plot, r0)
        sys.exit(dispatch(cfg))
    return command


_make("validate", "Parse and validate a triangulation.")
_make("analyze", "Classify subsets; exit 0/10/20 for SUB/CRITICAL/SUPERCRITICAL.")
_make("flow", "Integrate the Ricci flow and write trace.csv.")
_make("solve", "Circle pattern metric, or the degeneration order r* when critical.")
_make("limit", "r*, the flow, and the degeneration-order and AGS checks.")
_make("verify", "Run the independent oracle battery.")


if __name__ == "__main__":
    main()
