"""Command-line front end.

Exit status: 0 on success, 2 for invalid input (flags, grammar, missing files),
3 for numerical or output failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import SolverError, ValidationError
from .fourier import DEFAULT_BANDWIDTH, GridFunction, SymbolTable, default_grid_size, synthesize
from .measurements import l2_admissible, sampling_admissible
from .operators import green_table
from .solver import (
    ReconProblem,
    SolverConfig,
    build_system,
    extract,
    lambda_max,
    solution_table,
    solve_tikhonov,
    solve_tv,
)
from .splines import spline_table

log = logging.getLogger("torus_splines")

EXIT_OK, EXIT_INVALID, EXIT_FAILURE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}")


def _add_output(p):
    p.add_argument("--format", choices=["csv", "json-lines"], default="csv")
    p.add_argument("--output", "-o", help="output file (default: standard output)")


def _add_synthesis(p, dim_flag=True):
    if dim_flag:
        p.add_argument("--dim", type=int, default=1, choices=[1, 2, 3])
    p.add_argument("--bandwidth", type=int, help="retained frequencies per axis (default by dim)")
    p.add_argument("--grid", type=int, help="samples per axis, a power of two")
    p.add_argument("--smoothing", choices=["none", "fejer"], default="none")


def _add_solver(p):
    p.add_argument("--problem", required=True, help="problem file")
    p.add_argument("--lambda", dest="lam", type=float, help="override the problem's lambda")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="torus-splines", description="Periodic splines and TV reconstruction on the torus.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("green", help="sample a Green's function or the two-knot spline")
    p.add_argument("--op", required=True, help="operator, e.g. sobolev:alpha=2,gamma=2")
    _add_synthesis(p)
    p.add_argument("--two-knot", action="store_true", help="emit g(x) - g(x - pi e_1)")
    p.add_argument("--no-normalize", action="store_true", help="skip peak normalization")
    _add_output(p)

    p = sub.add_parser("spline", help="synthesize a spline file on a grid")
    p.add_argument("--spline", required=True)
    _add_synthesis(p, dim_flag=False)
    _add_output(p)

    p = sub.add_parser("admissible", help="sampling and L2 admissibility verdicts")
    p.add_argument("--op", required=True, action="append")
    p.add_argument("--dim", type=int, default=1, choices=[1, 2, 3])

    for name, text in (("reconstruct", "TV reconstruction"), ("tikhonov", "quadratic baseline"), ("compare", "both solvers side by side")):
        p = sub.add_parser(name, help=text)
        _add_solver(p)
        if name != "tikhonov":
            p.add_argument("--max-iter", type=int, default=SolverConfig.max_iter)
            p.add_argument("--tol", type=float, default=SolverConfig.rel_tol)
            p.add_argument("--rho", type=float, default=SolverConfig.null_penalty)
            p.add_argument("--threshold", type=float, default=1e-4, help="sparsification threshold")
        if name == "reconstruct":
            p.add_argument("--lambda-max", action="store_true", help="print the zero-solution threshold and exit")
            p.add_argument("--solution", help="write the grid solution here")
            p.add_argument("--spline-out", help="write the extracted spline here")
        if name == "tikhonov":
            p.add_argument("--solution", help="write the expansion coefficients here")
            p.add_argument("--grid-out", help="write the synthesized reconstruction (CSV) here")
        p.add_argument("--format", choices=["csv", "json-lines"], default="csv")
        p.add_argument("--output", "-o", help="summary table destination (default: standard output)")
    return parser


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise SolverError(f"cannot write {path}: {exc}") from None


def _sizes(dim, bandwidth, grid):
    K = bandwidth or DEFAULT_BANDWIDTH[dim]
    n = grid or default_grid_size(K)
    if K < 1:
        raise ValidationError("bandwidth must be positive")
    return K, n


def cmd_green(args) -> int:
    op = io.parse_operator(args.op, args.dim)
    K, n = _sizes(op.dim, args.bandwidth, args.grid)
    table = green_table(op, K)
    if args.two_knot:
        shift = np.zeros(op.dim)
        shift[0] = np.pi
        table = table - table.shifted(shift)
    grid = synthesize(table, n, args.smoothing)
    if not args.no_normalize:
        v = grid.values
        peak = v.max() if v.max() > 0 else np.abs(v).max()
        if peak == 0:
            raise SolverError("Green's function vanishes on the grid; cannot normalize")
        grid = GridFunction(v / peak)
    _write(io.emit(grid, args.format), args.output)
    return EXIT_OK


def cmd_spline(args) -> int:
    spline = io.read_spline(args.spline)
    K, n = _sizes(spline.dim, args.bandwidth, args.grid)
    grid = synthesize(spline_table(spline, K), n, args.smoothing)
    _write(io.emit(grid, args.format), args.output)
    return EXIT_OK


def cmd_admissible(args) -> int:
    lines = []
    for text in args.op:
        op = io.parse_operator(text, args.dim)
        s, l2 = sampling_admissible(op), l2_admissible(op)
        lines.append(f"{io.format_operator(op)}\tdim={op.dim}\tsampling: {s}\tl2: {l2}")
    _write("\n".join(lines) + "\n", None)
    return EXIT_OK


def _config(args) -> SolverConfig:
    return SolverConfig(max_iter=args.max_iter, rel_tol=args.tol, null_penalty=args.rho)


def _f(v) -> str:
    return repr(float(v))


SUMMARY_HEADER = ["method", "lambda", "objective", "data_fit", "reg_value", "knots", "iterations", "converged", "rel_error"]


def _rel_error(table: SymbolTable, truth) -> str:
    if truth is None:
        return ""
    t = spline_table(truth, table.bandwidth).coeffs
    return _f(np.linalg.norm(table.coeffs - t) / max(np.linalg.norm(t), 1e-300))


def run_tv(problem: ReconProblem, truth, cfg: SolverConfig, threshold: float):
    system = build_system(problem)
    sol = solve_tv(problem, cfg, system)
    ex = extract(problem, sol, threshold)
    d = sol.diagnostics
    row = ["tv", _f(problem.lam), _f(d.objective), _f(d.data_fit), _f(d.reg_value),
           str(len(ex.spline.innov)), str(d.iterations), str(d.converged),
           _rel_error(solution_table(problem, sol), truth)]
    return sol, ex, row


def run_tikhonov(problem: ReconProblem, truth):
    t = solve_tikhonov(problem)
    row = ["tikhonov", _f(problem.lam), _f(t.objective), _f(t.data_fit), _f(t.reg_value),
           "", "", "", _rel_error(t.table, truth)]
    return t, row


def cmd_reconstruct(args) -> int:
    problem, truth = io.read_problem(args.problem, args.lam)
    if args.lambda_max:
        _write(_f(lambda_max(problem)) + "\n", args.output)
        return EXIT_OK
    sol, ex, row = run_tv(problem, truth, _config(args), args.threshold)
    if args.solution:
        try:
            io.write_solution(args.solution, sol, dict(zip(SUMMARY_HEADER, row)))
        except OSError as exc:
            raise SolverError(f"cannot write {args.solution}: {exc}") from None
    if args.spline_out:
        try:
            io.write_spline(ex.spline, args.spline_out)
        except OSError as exc:
            raise SolverError(f"cannot write {args.spline_out}: {exc}") from None
    if not sol.diagnostics.converged:
        log.warning("solver stopped after %d iterations without meeting the tolerance", sol.diagnostics.iterations)
    _write(io.emit_rows(SUMMARY_HEADER, [row], args.format), args.output)
    return EXIT_OK


def cmd_tikhonov(args) -> int:
    problem, truth = io.read_problem(args.problem, args.lam)
    t, row = run_tikhonov(problem, truth)
    if args.solution:
        lines = ["[tikhonov]", "coeffs = " + " ".join(_f(v) for v in t.coeffs),
                 "null_coeffs = " + " ".join(_f(v) for v in t.null_coeffs)]
        _write("\n".join(lines) + "\n", args.solution)
    if args.grid_out:
        _write(io.emit(synthesize(t.table), "csv"), args.grid_out)
    _write(io.emit_rows(SUMMARY_HEADER, [row], args.format), args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    problem, truth = io.read_problem(args.problem, args.lam)
    _, _, tv_row = run_tv(problem, truth, _config(args), args.threshold)
    _, tk_row = run_tikhonov(problem, truth)
    _write(io.emit_rows(SUMMARY_HEADER, [tv_row, tk_row], args.format), args.output)
    return EXIT_OK


COMMANDS = {
    "green": cmd_green,
    "spline": cmd_spline,
    "admissible": cmd_admissible,
    "reconstruct": cmd_reconstruct,
    "tikhonov": cmd_tikhonov,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    for flag in ("output", "solution", "spline_out", "grid_out"):
        path = getattr(args, flag, None)
        if path and not Path(path).resolve().parent.is_dir():
            print(f"error: output directory for {path} does not exist", file=sys.stderr)
            return EXIT_FAILURE
    try:
        return COMMANDS[args.command](args)
    except (SolverError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


run = main

if __name__ == "__main__":
    sys.exit(main())
