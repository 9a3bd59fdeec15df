"""
bootlab command-line entry point.

    bootlab <subcommand> [options]

Exit status: 0 on success, 2 on a domain or validation error, 3 when a
quadrature does not converge, 64 for an unknown subcommand.
"""

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import ValidationError

from bootlab.cli.reports import (
    CommandReport,
    OutputFormat,
    RunConfig,
    flat_csv,
    rows_to_csv,
)
from bootlab.core.config import settings
from bootlab.core.errors import domain_error, error_payload, exit_code_for
from bootlab.core.logging_config import setup_logging
from bootlab.services import blockers, engine, graphs, montecarlo, special, structure, variational
from bootlab.services.lattice import CellSet, LatticeSpec, Rect, load_spec
from bootlab.services.metrics import registry

logger = logging.getLogger("Bootlab.CLI")

EXIT_USAGE = 64

Handler = Callable[[argparse.Namespace, RunConfig], Tuple[CommandReport, Optional[str]]]


# --- Argument helpers ---


def _ints(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise domain_error(f"Expected comma-separated integers, got '{text}'")


def _floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise domain_error(f"Expected comma-separated numbers, got '{text}'")


def _spec(args: argparse.Namespace) -> LatticeSpec:
    return load_spec(args.spec, args.spec_json)


def _cells(spec: LatticeSpec, path: Optional[str]) -> CellSet:
    if path is None:
        return CellSet.empty(spec)
    with open(path, "r", encoding="utf-8") as f:
        return CellSet.from_text(spec, f.read())


def _required(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise domain_error(f"{args.command} needs --{', --'.join(missing)}")


def _trial_csv(report: montecarlo.TrialReport) -> str:
    return rows_to_csv(["p", "estimate", "half_width", "trials", "seed"], [report.csv_row()])


# --- Handlers ---


def cmd_lambda(args, config):
    tol = config.tol or settings.DEFAULT_TOL
    result = special.lambda_(args.d, args.r, tol)
    return CommandReport(command="lambda", data={"d": args.d, "r": args.r, "tol": tol, **result.to_dict()}), None


def cmd_table(args, config):
    tol = config.tol or settings.TABLE_TOL
    table = special.lambda_table(args.dmax, tol)
    entries = [
        {"d": d, "r": r, "value": res.value, "abs_error_estimate": res.abs_error_estimate}
        for (d, r), res in sorted(table.items(), key=lambda item: (item[0][1], item[0][0]))
    ]
    dims = list(range(2, args.dmax + 1))
    rows = [
        [r] + [f"{table[(d, r)].value:.4f}" if d >= r else "" for d in dims]
        for r in range(2, args.dmax + 1)
    ]
    csv_text = rows_to_csv(["r"] + [f"d={d}" for d in dims], rows)
    return CommandReport(command="table", data={"dmax": args.dmax, "tol": tol, "entries": entries}), csv_text


def cmd_close(args, config):
    spec = _spec(args)
    a = _cells(spec, args.cells)
    bc = engine.BoundaryCondition.parse(args.bc)
    if args.rect:
        result = engine.confined_closure(spec, Rect.parse(args.rect), a, bc)
    else:
        result = engine.closure(spec, a, bc)
    return CommandReport(command="close", data=result.to_dict(include_cells=not args.summary)), None


def cmd_span(args, config):
    spec = _spec(args)
    decomposition = engine.span(spec, _cells(spec, args.cells))
    rects = [r.to_dict() for r in decomposition.rects]
    csv_text = rows_to_csv(["lo", "hi"], [[str(r.lo), str(r.hi)] for r in decomposition.rects])
    return CommandReport(command="span", data={"count": len(rects), "rects": rects}), csv_text


def cmd_cross(args, config):
    spec = _spec(args)
    _required(args, "rect")
    rect = Rect.parse(args.rect)
    axis = args.axis or 1
    forced = _cells(spec, args.forced) if args.forced else None
    if args.cells:
        hit = engine.crossed(spec, rect, _cells(spec, args.cells), axis, forced)
        return CommandReport(command="cross", data={"rect": rect.to_dict(), "axis": axis, "crossed": hit}), None
    _required(args, "p")
    report = montecarlo.crossing_prob(spec, rect, args.p, axis, args.trials, args.seed, forced)
    return (
        CommandReport(command="cross", master_seed=report.master_seed, data=report.model_dump()),
        _trial_csv(report),
    )


def cmd_prob(args, config):
    spec = _spec(args)
    _required(args, "p")
    report = montecarlo.percolation_prob(spec, args.p, args.trials, args.seed)
    return (
        CommandReport(command="prob", master_seed=report.master_seed, data=report.model_dump()),
        _trial_csv(report),
    )


def cmd_pc(args, config):
    spec = _spec(args)
    estimate = montecarlo.pc_estimate(spec, args.trials, args.tol or 1e-3, args.seed, args.target)
    csv_text = rows_to_csv(
        ["p_lo", "p_mid", "p_hi", "trials", "seed"],
        [[estimate.p_lo, estimate.p_mid, estimate.p_hi, estimate.trials_per_probe, estimate.master_seed]],
    )
    return CommandReport(command="pc", master_seed=estimate.master_seed, data=estimate.model_dump()), csv_text


def cmd_diam_event(args, config):
    spec = _spec(args)
    _required(args, "p", "length")
    report = montecarlo.diam_event_prob(spec, args.p, args.length, args.trials, args.seed)
    return (
        CommandReport(command="diam-event", master_seed=report.master_seed, data=report.model_dump()),
        _trial_csv(report),
    )


def _parse_u(text: str, exact: bool):
    try:
        return Fraction(text) if exact else float(text)
    except (ValueError, ZeroDivisionError):
        kind = "a fraction" if exact else "a number"
        raise domain_error(f"Cannot read u = '{text}' as {kind}")


def cmd_lgap(args, config):
    u = _parse_u(args.u_text, args.exact)
    value = blockers.lgap_probability_exact(args.m, args.ell, u)
    if args.exact:
        data = {"m": args.m, "ell": args.ell, "u": str(u), "probability": str(value), "float": float(value)}
    else:
        k = args.ell + 1
        data = {
            "m": args.m,
            "ell": args.ell,
            "u": u,
            "probability": value,
            "lower_bound": special.beta(k, u) ** (args.m + 1),
            "upper_bound": special.beta(k, u) ** args.m,
        }
    return CommandReport(command="lgap", data=data), None


def cmd_gamma(args, config):
    spec = _spec(args)
    _required(args, "x", "m")
    x = _ints(args.x)
    if args.cells is not None or args.p is None:
        result = structure.gamma_set(spec, _cells(spec, args.cells), args.m, x)
        data = {"x": list(x), "m": args.m, "size": len(result), "cells": [list(c) for c in result.cells()]}
        return CommandReport(command="gamma", data=data), None
    report = montecarlo.gamma_expectation(spec, args.p, args.m, x, args.trials, args.seed)
    return CommandReport(command="gamma", master_seed=report.master_seed, data=report.model_dump()), None


def cmd_chain(args, config):
    if args.figure:
        chain = graphs.figure_chain()
    else:
        _required(args, "file")
        with open(args.file, "r", encoding="utf-8") as f:
            chain = graphs.ChainFile.model_validate_json(f.read()).to_chain()
    data = {"S": list(chain.S), "m": chain.m, "crossed": graphs.chain_crossed(chain)}
    return CommandReport(command="chain", data=data), None


def cmd_wpath(args, config):
    _required(args, "a", "b")
    f = variational.face_cost(args.f)
    a, b = _floats(args.a), _floats(args.b)
    result = variational.w_min(f, a, b, args.grid)
    data = {
        "f": args.f,
        "a": list(a),
        "b": list(b),
        **result.to_dict(),
        "upper_bound": variational.straight_path_upper_bound(f, a, b),
        "lower_bound": variational.minw_lower_bound(f, a, b),
    }
    return CommandReport(command="wpath", data=data), None


def cmd_al_window(args, config):
    spec = _spec(args)
    _required(args, "L")
    rect = structure.al_window(spec, _cells(spec, args.cells), args.L)
    return CommandReport(command="al-window", data={"L": args.L, "rect": rect.to_dict(), "long": rect.long}), None


def cmd_small_component(args, config):
    spec = _spec(args)
    _required(args, "L")
    x = structure.small_component(spec, _cells(spec, args.cells), args.L)
    data = {"L": args.L, "diam": engine.diam(spec, x), "size": len(x), "cells": [list(c) for c in x.cells()]}
    return CommandReport(command="small-component", data=data), None


def cmd_double_gap(args, config):
    spec = _spec(args)
    _required(args, "rect")
    rect = Rect.parse(args.rect)
    axis = args.axis or 1
    gap = structure.has_double_gap(spec, rect, _cells(spec, args.cells), axis)
    return CommandReport(command="double-gap", data={"rect": rect.to_dict(), "axis": axis, "double_gap": gap}), None


def cmd_blocked(args, config):
    spec = _spec(args)
    _required(args, "corner", "axis")
    edge = blockers.BoundaryEdge(_ints(args.corner), args.axis)
    hit = blockers.edge_blocked(spec, _cells(spec, args.cells), edge, full=args.full)
    data = {"corner": list(edge.corner), "axis": edge.axis, "full": args.full, "blocked": hit}
    return CommandReport(command="blocked", data=data), None


def cmd_detercross(args, config):
    spec = _spec(args)
    _required(args, "axis")
    case = blockers.detercross_check(spec, _cells(spec, args.cells), args.axis)
    return CommandReport(command="detercross", data={"axis": args.axis, "case": case.value}), None


def cmd_highdim_lambda(args, config):
    tol = config.tol or settings.DEFAULT_TOL
    root = special.lambda_highdim(tol)
    data = {"tol": tol, "value": root, "residual": special.highdim_series(root)}
    return CommandReport(command="highdim-lambda", data=data), None


HANDLERS: Dict[str, Handler] = {
    "lambda": cmd_lambda,
    "table": cmd_table,
    "close": cmd_close,
    "span": cmd_span,
    "cross": cmd_cross,
    "prob": cmd_prob,
    "pc": cmd_pc,
    "diam-event": cmd_diam_event,
    "lgap": cmd_lgap,
    "gamma": cmd_gamma,
    "chain": cmd_chain,
    "wpath": cmd_wpath,
    "al-window": cmd_al_window,
    "small-component": cmd_small_component,
    "double-gap": cmd_double_gap,
    "blocked": cmd_blocked,
    "detercross": cmd_detercross,
    "highdim-lambda": cmd_highdim_lambda,
}


# --- Parser ---


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", default="json", choices=[f.value for f in OutputFormat])
    common.add_argument("--json", dest="output_format", action="store_const", const="json")
    common.add_argument("--metrics", action="store_true", help="Dump Prometheus metrics to stderr")
    common.add_argument("--log-level", default=None)

    lattice = argparse.ArgumentParser(add_help=False)
    lattice.add_argument("--spec", help="Lattice spec JSON file")
    lattice.add_argument("--spec-json", help="Inline lattice spec JSON")
    lattice.add_argument("--cells", help="Initial set, one comma-separated cell per line")

    trials = argparse.ArgumentParser(add_help=False)
    trials.add_argument("--trials", type=int, default=1000)
    trials.add_argument("--seed", type=int, default=None)
    trials.add_argument("--p", type=float)

    parser = argparse.ArgumentParser(prog="bootlab", description="Bootstrap percolation laboratory")
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")

    p = sub.add_parser("lambda", parents=[common], help="lambda(d, r) by quadrature")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("table", parents=[common], help="lambda(d, r) triangle")
    p.add_argument("--dmax", type=int, default=7)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("close", parents=[common, lattice], help="Bootstrap closure")
    p.add_argument("--bc", default="none", help="none | all-outside | half-low:J | half-high:J")
    p.add_argument("--rect", help="Confine the process to x1,y1:x2,y2")
    p.add_argument("--summary", action="store_true", help="Omit the cell list")

    p = sub.add_parser("span", parents=[common, lattice], help="Span of the closure")

    p = sub.add_parser("cross", parents=[common, lattice, trials], help="Crossing event or its probability")
    p.add_argument("--rect")
    p.add_argument("--axis", type=int)
    p.add_argument("--forced", help="Cells forced infected inside the rectangle")

    sub.add_parser("prob", parents=[common, lattice, trials], help="Percolation probability")

    p = sub.add_parser("pc", parents=[common, lattice, trials], help="Critical probability by bisection")
    p.add_argument("--tol", type=float)
    p.add_argument("--target", type=float, default=0.5)

    p = sub.add_parser("diam-event", parents=[common, lattice, trials], help="P(diam [A] >= length)")
    p.add_argument("--length", type=int)

    p = sub.add_parser("lgap", parents=[common], help="Probability of no L-gap")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--u", dest="u_text", required=True)
    p.add_argument("--exact", action="store_true", help="Rational arithmetic (u like 1/3)")

    p = sub.add_parser("gamma", parents=[common, lattice, trials], help="Gamma set or its expected size")
    p.add_argument("--x")
    p.add_argument("--m", type=int)

    p = sub.add_parser("chain", parents=[common], help="Crossing of a chain of coloured graphs")
    p.add_argument("--file")
    p.add_argument("--figure", action="store_true", help="Use the built-in three-vertex example")

    p = sub.add_parser("wpath", parents=[common], help="Minimal variational cost W_f(a, b)")
    p.add_argument("--f", default="g:1", help="g:K or const:C")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--grid", type=int, default=64)

    p = sub.add_parser("al-window", parents=[common, lattice], help="Spanned rectangle with L <= long <= 2L")
    p.add_argument("--L", type=int)

    p = sub.add_parser("small-component", parents=[common, lattice], help="Filled component with L <= diam <= 2L")
    p.add_argument("--L", type=int)

    p = sub.add_parser("double-gap", parents=[common, lattice], help="Two adjacent empty hyperplanes")
    p.add_argument("--rect")
    p.add_argument("--axis", type=int)

    p = sub.add_parser("blocked", parents=[common, lattice], help="Slab boundary edge blocked")
    p.add_argument("--corner", help="Corner of the thick box, e.g. 1,4")
    p.add_argument("--axis", type=int)
    p.add_argument("--full", action="store_true")

    p = sub.add_parser("detercross", parents=[common, lattice], help="Crossing trichotomy on a slab")
    p.add_argument("--axis", type=int)

    p = sub.add_parser("highdim-lambda", parents=[common], help="Root of the high-dimensional series")
    p.add_argument("--tol", type=float)

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.model_fields and v is not None}
    if getattr(args, "u_text", None) is not None and not args.exact:
        fields["u"] = args.u_text
    return RunConfig(**fields)


def _render(report: CommandReport, csv_text: Optional[str], fmt: OutputFormat) -> str:
    if fmt == OutputFormat.CSV:
        return csv_text if csv_text is not None else flat_csv(report.model_dump(exclude={"data"}) | report.data)
    if fmt == OutputFormat.TEXT:
        return report.to_text()
    return report.model_dump_json(indent=2) + "\n"


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    load_dotenv()
    parser = build_parser()

    if not argv or (argv[0] not in HANDLERS and not argv[0].startswith("-")):
        parser.print_usage(sys.stderr)
        if argv:
            print(f"bootlab: unknown subcommand '{argv[0]}'", file=sys.stderr)
        return EXIT_USAGE

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    setup_logging(
        level=args.log_level or settings.LOG_LEVEL,
        log_to_file=settings.LOG_TO_FILE,
        log_dir=settings.LOG_DIR,
    )
    fmt = OutputFormat(args.output_format)
    try:
        try:
            config = _run_config(args)
            report, csv_text = HANDLERS[args.command](args, config)
        except ValidationError as e:
            raise domain_error(str(e))
        except (OSError, json.JSONDecodeError) as e:
            raise domain_error(f"Cannot read input: {e}")
    except Exception as e:
        payload = error_payload(e)
        if fmt == OutputFormat.JSON:
            sys.stdout.write(payload.model_dump_json(indent=2) + "\n")
        else:
            print(f"error: {payload.error.code}: {payload.error.details}", file=sys.stderr)
        return exit_code_for(e)
    finally:
        if args.metrics:
            sys.stderr.write(registry.export_prometheus() + "\n")

    sys.stdout.write(_render(report, csv_text, fmt))
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
