"""Command-line front end.

One invocation runs one job and writes its outputs plus a JSON manifest
into the output directory:

  --mode vim       evaluate the truncated series on the grid (surface file)
  --mode iterates  list every iterate's terms (exponent pair + coefficient)
  --mode oracle    run the finite-difference reference (surface file)
  --mode compare   run both and write an error report

Surface files use the schema  header ``x,t,u``, rows in t-major order
(CSV) or ``{"x": [...], "t": [...], "u": [[...]]}`` with u indexed
[t][x] (JSON).  Floats are printed with 12 significant digits.  The
environment variable FRACBURGERS_OUTDIR overrides --output.

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O
error.  Errors print one machine-parsable line to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .expressions import (
    DifferentiationError,
    EvaluationError,
    ExpressionError,
    to_string,
)
from .reference import (
    DivergenceError,
    GridSpec,
    StabilityError,
    compare,
    solve_fd,
    stability_margin,
)
from . import series as series_mod
from .series import BurgersProblem, IterationError, TermCapError, evaluate_grid, vim_solve

__all__ = ["RunConfig", "build_parser", "run", "main", "entry_point"]

MODES = ("vim", "oracle", "compare", "iterates")
FORMATS = ("csv", "json")
MAX_ITERS = 6  # term growth through the nonlinear product is combinatorial
OUTDIR_ENV = "FRACBURGERS_OUTDIR"
FLOAT_DIGITS = 12

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

#: description string recorded in every manifest: which branch of the
#: iteration kernel the engine realises
MULTIPLIER_BRANCH = "real branch -(t-tau)^(alpha-1)/gamma(alpha)"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str
    alpha: float
    A: float
    p: int
    g: str
    h: Optional[str]
    iters: int
    x_min: float
    x_max: float
    nx: int
    t_max: float
    nt: int
    boundary: str
    output: str
    format: str
    seed: int


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracburgers",
        description=(
            "Series and finite-difference solvers for "
            "D_t^alpha u = u_xx + A u^p u_x"
        ),
    )
    parser.add_argument("--mode", required=True, choices=MODES)
    parser.add_argument("--alpha", type=float, required=True, help="order in (0, 2]")
    parser.add_argument("--A", type=float, default=-1.0, help="nonlinear coupling")
    parser.add_argument("--p", type=int, default=1, help="positive integer power")
    parser.add_argument("--g", required=True, help="initial value u(x,0), e.g. 'sin(pi*x)'")
    parser.add_argument("--h", default=None, help="initial rate u_t(x,0), required for alpha > 1")
    parser.add_argument("--iters", type=int, default=2, help="correction steps (<= %d)" % MAX_ITERS)
    parser.add_argument("--x-min", type=float, default=0.0)
    parser.add_argument("--x-max", type=float, default=1.0)
    parser.add_argument("--nx", type=int, default=51)
    parser.add_argument("--t-max", type=float, default=1.0)
    parser.add_argument("--nt", type=int, default=51)
    parser.add_argument("--boundary", choices=("dirichlet", "periodic"), default="dirichlet")
    parser.add_argument("--output", default="fracburgers-out", help="output directory")
    parser.add_argument("--format", choices=FORMATS, default="csv")
    parser.add_argument("--seed", type=int, default=1729, help="recorded sampling seed")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    output = os.environ.get(OUTDIR_ENV) or ns.output
    return RunConfig(
        mode=ns.mode,
        alpha=ns.alpha,
        A=ns.A,
        p=ns.p,
        g=ns.g,
        h=ns.h,
        iters=ns.iters,
        x_min=ns.x_min,
        x_max=ns.x_max,
        nx=ns.nx,
        t_max=ns.t_max,
        nt=ns.nt,
        boundary=ns.boundary,
        output=output,
        format=ns.format,
        seed=ns.seed,
    )


def _validate(config: RunConfig) -> BurgersProblem:
    if config.iters < 0 or config.iters > MAX_ITERS:
        raise ConfigError(f"iters must lie in 0..{MAX_ITERS}")
    try:
        problem = BurgersProblem(
            alpha=config.alpha, A=config.A, p=config.p, g=config.g, h=config.h
        )
    except (ValueError, ExpressionError) as exc:
        raise ConfigError(str(exc)) from exc
    if config.mode in ("oracle", "compare") and problem.m != 1:
        raise ConfigError("oracle and compare modes require 0 < alpha <= 1")
    return problem


def _grid(config: RunConfig) -> GridSpec:
    try:
        return GridSpec(
            config.x_min, config.x_max, config.nx, config.t_max, config.nt,
            config.boundary,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(value: float) -> str:
    return f"{value:.{FLOAT_DIGITS}g}"


def _round_trip(value: float) -> float:
    return float(_fmt(value))


def _write_surface(path, xs, ts, values, fmt):
    """values[i, j] = u(x_i, t_j); CSV rows are t-major."""
    if fmt == "csv":
        lines = ["x,t,u"]
        for j, t in enumerate(ts):
            for i, x in enumerate(xs):
                lines.append(f"{_fmt(x)},{_fmt(t)},{_fmt(values[i, j])}")
        path.write_text("\n".join(lines) + "\n")
    else:
        payload = {
            "x": [_round_trip(v) for v in xs],
            "t": [_round_trip(v) for v in ts],
            "u": [[_round_trip(values[i, j]) for i in range(len(xs))] for j in range(len(ts))],
        }
        path.write_text(json.dumps(payload, sort_keys=True) + "\n")


def _write_iterates(path, iterates, fmt):
    rows = []
    for k, u in enumerate(iterates):
        for exponent, coeff in u.sorted_terms():
            rows.append(
                {
                    "iterate": k,
                    "i": exponent.i,
                    "j": exponent.j,
                    "exponent": _round_trip(exponent.value(u.alpha)),
                    "coefficient": to_string(coeff),
                }
            )
    if fmt == "csv":
        lines = ["iterate,i,j,exponent,coefficient"]
        for r in rows:
            coeff = '"' + r["coefficient"].replace('"', '""') + '"'
            lines.append(f"{r['iterate']},{r['i']},{r['j']},{_fmt(r['exponent'])},{coeff}")
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_text(json.dumps({"iterates": rows}, sort_keys=True) + "\n")


def _write_manifest(path, config: RunConfig, problem: BurgersProblem, extra):
    manifest = {
        "version": __version__,
        "config": asdict(config),
        "regime": problem.m,
        "multiplier_branch": MULTIPLIER_BRANCH,
        "initial_iterate": "g" if problem.m == 1 else "g + t*h",
        "term_cap": series_mod.TERM_CAP,
        "float_digits": FLOAT_DIGITS,
        "seed": config.seed,
    }
    manifest.update(extra)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def run(config: RunConfig) -> int:
    """Execute one job; raises on failure (mapping happens in main)."""
    problem = _validate(config)
    outdir = Path(config.output)
    outdir.mkdir(parents=True, exist_ok=True)
    ext = config.format
    extra = {"outputs": []}

    if config.mode in ("vim", "compare", "iterates"):
        iterates = vim_solve(problem, config.iters)

    if config.mode in ("oracle", "compare"):
        grid = _grid(config)
        field = solve_fd(problem, grid)
        extra["boundary"] = grid.boundary
        extra["stability_margin"] = field.stability_margin

    if config.mode == "vim":
        grid = _grid(config)
        xs, ts = grid.x_values(), grid.t_values()
        values = evaluate_grid(iterates[-1], xs, ts)
        surface = outdir / f"surface.{ext}"
        _write_surface(surface, xs, ts, values, config.format)
        extra["outputs"].append(surface.name)
    elif config.mode == "iterates":
        listing = outdir / f"iterates.{ext}"
        _write_iterates(listing, iterates, config.format)
        extra["outputs"].append(listing.name)
    elif config.mode == "oracle":
        xs, ts = grid.x_values(), grid.t_values()
        surface = outdir / f"field.{ext}"
        _write_surface(surface, xs, ts, field.values, config.format)
        extra["outputs"].append(surface.name)
    else:  # compare
        xs, ts = grid.x_values(), grid.t_values()
        values = evaluate_grid(iterates[-1], xs, ts)
        series_file = outdir / f"surface.{ext}"
        field_file = outdir / f"field.{ext}"
        _write_surface(series_file, xs, ts, values, config.format)
        _write_surface(field_file, xs, ts, field.values, config.format)
        report = compare(iterates[-1], field, config.t_max)
        report_file = outdir / "report.json"
        report_file.write_text(
            json.dumps(
                {
                    "max_error": report.max_error,
                    "rms_error": report.rms_error,
                    "x_at_max": report.x_at_max,
                    "t_at_max": report.t_at_max,
                    "t_cut": report.t_cut,
                    "n_points": report.n_points,
                    "notes": report.notes,
                },
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
        extra["outputs"] += [series_file.name, field_file.name, report_file.name]

    _write_manifest(outdir / "manifest.json", config, problem, extra)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed a message; normalise the code
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    config = config_from_args(ns)
    try:
        return run(config)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        StabilityError,
        DivergenceError,
        TermCapError,
        IterationError,
        EvaluationError,
        DifferentiationError,
        ValueError,
    ) as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return EXIT_IO


def entry_point():  # console-script wrapper
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
