"""Command-line interface.

Exit status is 0 on success, 1 when the input is rejected (invalid spline,
bad option values, failed guarantees) and 2 when a file cannot be read or
written.  All numbers are printed with full binary64 precision.

CSV schemas
-----------
coarsening report   step,breakpoint,multiplicity_before,epsilon,cumulative,dof
indicators          j,breakpoint,multiplicity,epsilon
refinement          level,dof,l2_error
indicator curves    strategy,indicator,refit,dof,l2_error
linf samples        x,y,error_<k>_knots...
heat trace          t,dof_coarsened,dof_reference
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as exp
from .bspline import insert_knot, open_knot_vector
from .coarsen import (
    coarsen_h1,
    coarsen_l2,
    coarsen_linf,
    coarsen_to_budget,
    compute_all_indicators,
)
from .errors import SplineError
from .functions import BUILTINS
from .galerkin import adaptive_refine, l2_error, l2_project
from .io import read_samples, read_spline, samples_to_c0_cubic, write_spline
from .removal import remove_knot


class UsageError(SplineError):
    """Invalid combination of command-line options."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _emit_spline(s, out: str | None) -> None:
    if out is None:
        from .io import spline_to_dict

        sys.stdout.write(json.dumps(spline_to_dict(s), indent=2) + "\n")
    else:
        write_spline(s, out)


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    s = read_spline(args.spline)
    kv = s.space
    print(f"degree {kv.degree}")
    print(f"dof {kv.n}")
    print(f"domain {kv.a!r} {kv.b!r}")
    print(f"open {kv.is_open}")
    print(f"breakpoints {kv.num_breakpoints}")
    print(f"interior_knots {kv.num_interior_knots}")
    for j in range(2, kv.num_breakpoints):
        zeta, m, i = kv.interior_breakpoint(j)
        print(f"  j={j} zeta={zeta!r} m={m} i={i}")
    return 0


def cmd_insert(args) -> int:
    s = read_spline(args.spline)
    for x in args.x:
        s = insert_knot(s, x)
    _emit_spline(s, args.output)
    return 0


def cmd_remove(args) -> int:
    s = read_spline(args.spline)
    new, err = remove_knot(s, args.breakpoint, args.norm)
    if args.output is not None:
        write_spline(new, args.output)
    print(repr(err))
    return 0


def cmd_indicators(args) -> int:
    s = read_spline(args.spline)
    cache = compute_all_indicators(s, args.norm)
    lines = ["j,breakpoint,multiplicity,epsilon"]
    for j, eps in enumerate(cache.values, start=2):
        zeta, m, _ = s.space.interior_breakpoint(j)
        lines.append(f"{j},{zeta!r},{m},{eps!r}")
    _write_text(args.output, "\n".join(lines) + "\n")
    return 0


def cmd_coarsen(args) -> int:
    s = read_spline(args.spline)
    if (args.tol is None) == (args.target_knots is None):
        raise UsageError("give exactly one of --tol and --target-knots")
    if args.norm != "l2" and args.strategy != "xi":
        raise UsageError("--strategy applies to --norm l2 only")
    if args.norm == "l2" and args.strategy in ("D", "jump") and args.refit == "local":
        raise UsageError(f"--strategy {args.strategy} requires --refit global-l2")
    if args.tol is not None:
        if args.strategy != "xi" or args.refit != "local":
            raise UsageError("--tol runs use --strategy xi with --refit local")
        driver = {"l2": coarsen_l2, "linf": coarsen_linf, "h1": coarsen_h1}[args.norm]
        rep = driver(s, args.tol)
        if not rep.total_error < args.tol:
            print(
                f"error: accumulated indicators {rep.total_error!r} not below tol {args.tol!r}",
                file=sys.stderr,
            )
            return 1
    else:
        if args.norm == "h1":
            raise UsageError("--target-knots is not available for --norm h1")
        norm = "linf" if args.norm == "linf" else args.strategy
        refit = "local" if args.norm == "linf" else args.refit
        rep = coarsen_to_budget(s, args.target_knots, norm, refit)
    _emit_spline(rep.final, args.output)
    if args.report is not None:
        _write_text(args.report, rep.to_csv())
    if args.report_json is not None:
        _write_text(args.report_json, json.dumps(rep.to_dict(), indent=2) + "\n")
    print(
        f"removed {len(rep.steps)} knots, dof {s.dof} -> {rep.final.dof}, "
        f"sum eps {rep.total_error!r}, stop {rep.stop_reason}",
        file=sys.stderr,
    )
    return 0


def _builtin(name):
    f, domain = BUILTINS[name]
    return f, domain


def cmd_project(args) -> int:
    f, domain = _builtin(args.f)
    if args.breakpoints < 2:
        raise UsageError("--breakpoints must be at least 2")
    m = args.multiplicity if args.multiplicity is not None else 1
    kv = open_knot_vector(np.linspace(domain[0], domain[1], args.breakpoints), args.degree, m)
    s = l2_project(f, kv)
    _emit_spline(s, args.output)
    print(f"l2_error {l2_error(f, s)!r}", file=sys.stderr)
    return 0


def cmd_refine(args) -> int:
    f, domain = _builtin(args.f)
    if args.steps < 0:
        raise UsageError("--steps must be non-negative")
    seq = adaptive_refine(f, args.degree, domain, args.steps, theta=args.theta)
    _emit_spline(seq[-1][1], args.output)
    if args.report is not None:
        lines = ["level,dof,l2_error"]
        lines += [f"{k},{s.dof},{l2_error(f, s)!r}" for k, (_, s) in enumerate(seq)]
        _write_text(args.report, "\n".join(lines) + "\n")
    return 0


def cmd_samples(args) -> int:
    s = samples_to_c0_cubic(read_samples(args.csv))
    _emit_spline(s, args.output)
    return 0


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_experiment(args) -> int:
    out = _out_dir(args)
    name = args.name
    if name in ("runge-coarsen", "root5"):
        func = "runge" if name == "runge-coarsen" else "root5"
        strategies = (1, 2, 3, 4) if func == "runge" else (1, 2, 3)
        degrees = args.degree or [2, 4]
        for p in degrees:
            ex = exp.indicator_experiment(func, p, args.steps, strategies)
            path = out / f"{name}-p{p}.csv"
            path.write_text(ex.to_csv(), encoding="utf-8")
            lo, hi = ex.window
            print(f"p={p} fine dof {ex.fine.dof}; slopes over dof [{lo:.1f}, {hi:.1f}]:")
            for k, v in ex.slopes().items():
                print(f"  strategy {k}: {v!r}")
            if 4 in strategies:
                f, _ = BUILTINS[func]
                tc = exp.terminal_comparison(f, ex.fine, args.tol)
                print(
                    f"  tol {tc.tol!r}: dof {tc.dof}, strategy 1 error {tc.error_reference!r}, "
                    f"strategy 4 error {tc.error_other!r}, ratio {tc.ratio!r}"
                )
            print(f"  wrote {path}")
    elif name == "linf-sample":
        s, runs = exp.linf_sample(101, (7, 3))
        data = exp.runge_samples(101)
        (out / "linf-sample.csv").write_text(exp.linf_csv(data, runs), encoding="utf-8")
        print(f"initial interior knots {s.space.num_interior_knots}")
        for r in runs:
            write_spline(r.report.final, out / f"linf-sample-{r.target}.json")
            (out / f"linf-sample-{r.target}-steps.csv").write_text(r.report.to_csv(), encoding="utf-8")
            print(
                f"  {r.interior_knots} interior knots: max sample error {r.max_sample_error!r}, "
                f"sum eps {r.indicator_sum!r}"
            )
    elif name == "heat":
        for p in args.degree or [2, 3, 4]:
            ex = exp.heat_experiment(p, args.breakpoints, args.dt, args.t_end, args.h1_tol)
            (out / f"heat-p{p}.csv").write_text(ex.to_csv(), encoding="utf-8")
            write_spline(ex.coarsened.final, out / f"heat-p{p}-coarsened.json")
            write_spline(ex.reference.final, out / f"heat-p{p}-reference.json")
            print(
                f"p={p}: initial error {ex.initial_error!r}, final difference "
                f"{ex.final_difference!r}, dof {ex.coarsened.dofs[0]} -> {ex.coarsened.dofs[-1]}"
            )
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="knotremoval",
        description="B-spline knot removal, coarsening and the accompanying experiments.",
        epilog="CSV schemas:\n" + __doc__.split("-----------\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spline_cmd(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("spline", help="spline JSON file")
        return p

    p = spline_cmd("validate", "check a spline file and print its breakpoint table")
    p.set_defaults(func=cmd_validate)

    p = spline_cmd("insert", "insert one or more knots")
    p.add_argument("--x", type=float, action="append", required=True, help="knot to insert (repeatable)")
    p.add_argument("-o", "--output", help="output spline JSON (default: stdout)")
    p.set_defaults(func=cmd_insert)

    p = spline_cmd("remove", "remove one occurrence of an interior breakpoint")
    p.add_argument("--breakpoint", type=int, required=True, help="1-based breakpoint index j")
    p.add_argument("--norm", choices=("xi", "cp", "linf"), default="xi")
    p.add_argument("-o", "--output", help="write the coarser spline here")
    p.set_defaults(func=cmd_remove)

    p = spline_cmd("indicators", "print the removal indicator of every interior breakpoint")
    p.add_argument("--norm", choices=("xi", "cp", "D", "jump", "linf"), default="xi")
    p.add_argument("-o", "--output", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_indicators)

    p = spline_cmd("coarsen", "greedy knot removal under a tolerance or knot budget")
    p.add_argument("--norm", choices=("l2", "linf", "h1"), default="l2")
    p.add_argument("--tol", type=float, help="error tolerance")
    p.add_argument("--target-knots", type=int, help="number of interior knots to keep")
    p.add_argument("--strategy", choices=("xi", "cp", "D", "jump"), default="xi")
    p.add_argument("--refit", choices=("local", "global-l2"), default="local")
    p.add_argument("-o", "--output", help="output spline JSON (default: stdout)")
    p.add_argument("--report", help="per-step CSV report")
    p.add_argument("--report-json", help="JSON report including the final spline")
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("project", help="L2 projection of a built-in function")
    p.add_argument("--f", choices=sorted(BUILTINS), required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--breakpoints", type=int, required=True, help="number of uniform breakpoints")
    p.add_argument("--multiplicity", type=int, help="interior multiplicity (default 1)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("refine", help="adaptive refinement of a built-in function on C0 meshes")
    p.add_argument("--f", choices=sorted(BUILTINS), required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--theta", type=float, default=0.5, help="maximum-marking fraction")
    p.add_argument("-o", "--output")
    p.add_argument("--report", help="CSV with one row per refinement level")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("samples", help="C0 cubic spline through (x, y) samples")
    p.add_argument("csv", help="two-column CSV, header optional")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_samples)

    p = sub.add_parser("experiment", help="reproduce one of the numerical experiments")
    p.add_argument("name", choices=("runge-coarsen", "root5", "linf-sample", "heat"))
    p.add_argument("--degree", type=int, action="append", help="degree (repeatable)")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--steps", type=int, help="refinement steps for the finest mesh")
    p.add_argument("--tol", type=float, default=1e-4, help="tolerance of the strategy comparison")
    p.add_argument("--breakpoints", type=int, default=1001)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--h1-tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SplineError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
