"""Command line front end: ``phibvp solve|verify|degree|bounds <problem-file> [options]``.

Exit codes:
    0  success (solve/verify: PASS; degree: nonzero)
    1  verify: FAIL
    2  solve: no convergence, or a bound violation
    3  invalid problem file, flags or CSV
    4  degree: zero
    5  degree: G vanishes on the boundary circle
    6  degree: boundary subdivision budget exceeded
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bounds import compute_bounds, working_radius
from .degree import DegreeQuery, brouwer_degree, build_G
from .dsl import DSLError, load_problem
from .exceptions import BoundViolation, BudgetExceeded, NoConvergence, PhiBVPError, ZeroOnBoundary
from .function_space import C1GridFunction, Grid
from .operators import residual_profile
from .solver import solve, verify

log = logging.getLogger("phibvp")

EXIT_OK, EXIT_FAIL, EXIT_NOCONV, EXIT_INVALID = 0, 1, 2, 3
EXIT_DEGREE_ZERO, EXIT_ZERO_ON_BOUNDARY, EXIT_BUDGET = 4, 5, 6
CSV_HEADER = ("t", "u", "du", "phi_du", "ode_residual")


class MalformedCSV(PhiBVPError, ValueError):
    pass


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return "none" if v is None else str(v)


def write_samples(path: Path, spec, u: C1GridFunction) -> None:
    """Write t, u, u', phi(u') and the nodal ODE residual with 17 significant digits."""
    grid = u.grid
    prof = residual_profile(spec, grid, u)
    phi_du = np.asarray(spec.phi.eval(u.du), dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in zip(grid.nodes, u.u, u.du, phi_du, prof):
            w.writerow([f"{v:.17g}" for v in row])


def read_samples(path: Path, T: float) -> C1GridFunction:
    """Read a samples CSV back; the t column must be the uniform grid on [0, T]."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise MalformedCSV(str(exc)) from exc
    if not rows or tuple(c.strip() for c in rows[0][:3]) != CSV_HEADER[:3]:
        raise MalformedCSV(f"expected header starting with {','.join(CSV_HEADER[:3])}")
    try:
        data = np.array([[float(c) for c in r[:3]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise MalformedCSV(f"non-numeric entry: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 3 or not np.all(np.isfinite(data)):
        raise MalformedCSV("need at least 3 complete, finite rows")
    grid = Grid(T, data.shape[0] - 1)
    if np.max(np.abs(data[:, 0] - grid.nodes)) > 1e-12 * max(1.0, T):
        raise MalformedCSV("t column is not the uniform grid on [0, T]")
    return C1GridFunction(grid, data[:, 1], data[:, 2])


def write_report(path: Path, fields: dict) -> None:
    with open(path, "w") as fh:
        for k, v in fields.items():
            fh.write(f"{k} = {_fmt(v)}\n")


def _apply_flags(spec, config, args):
    over = {}
    if args.n is not None:
        over["n"] = args.n
    if args.tol_res is not None:
        over["tol_res"] = args.tol_res
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "mode", None):
        over["mode"] = args.mode
    if over:
        config = replace(config, **over)
    if args.rho is not None:
        if not args.rho > 0:
            raise ValueError("--rho must be positive")
        spec = replace(spec, rho=args.rho)
    return spec, config


def cmd_solve(args) -> int:
    spec, config = _apply_flags(*load_problem(args.problem), args)
    try:
        report = solve(spec, config)
    except (NoConvergence, BoundViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except ZeroOnBoundary as exc:
        print(f"error: degree undefined: {exc}", file=sys.stderr)
        return EXIT_ZERO_ON_BOUNDARY
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.problem).stem
    write_samples(out / f"{stem}.csv", spec.normalized(), report.solution)
    fields = {"problem": spec.name, **report.as_dict()}
    write_report(out / f"{stem}.report.txt", fields)
    for k, v in fields.items():
        print(f"{k} = {_fmt(v)}")
    return EXIT_OK if report.verdict.passed else EXIT_NOCONV


def cmd_verify(args) -> int:
    spec, config = _apply_flags(*load_problem(args.problem), args)
    if args.csv is None:
        raise ValueError("verify needs a samples CSV")
    spec = spec.normalized()
    u = read_samples(Path(args.csv), spec.T)
    verdict = verify(spec, u.grid, u, config.tol_bc, config.tol_res)
    print(verdict)
    for msg in verdict.messages:
        print(f"  {msg}")
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_degree(args) -> int:
    spec, config = _apply_flags(*load_problem(args.problem), args)
    spec = spec.normalized()
    grid = Grid(spec.T, config.n)
    rho = working_radius(spec, compute_bounds(spec, grid))
    if rho is None:
        raise ValueError("no radius: pass --rho or supply hypotheses that give an a priori bound")
    try:
        deg = brouwer_degree(build_G(spec, grid), DegreeQuery(rho=rho))
    except ZeroOnBoundary as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ZERO_ON_BOUNDARY
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    print(f"rho = {rho:.17g}")
    print(f"degree = {deg}")
    return EXIT_OK if deg != 0 else EXIT_DEGREE_ZERO


def cmd_bounds(args) -> int:
    spec, config = _apply_flags(*load_problem(args.problem), args)
    spec = spec.normalized()
    grid = Grid(spec.T, config.n)
    rep = compute_bounds(spec, grid)
    for k, v in rep.as_dict().items():
        print(f"{k} = {_fmt(v)}")
    print(f"rho = {_fmt(working_radius(spec, rep))}")
    for note in rep.notes:
        print(f"note = {note}")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "degree": cmd_degree, "bounds": cmd_bounds}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phibvp", description="phi-Laplacian boundary value problem solver")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("problem", help="problem definition file")
    p.add_argument("csv", nargs="?", help="samples CSV (verify only)")
    p.add_argument("--n", type=int, help="grid intervals")
    p.add_argument("--rho", type=float, help="ball radius for the degree computation")
    p.add_argument("--tol-res", type=float, dest="tol_res", help="ODE residual tolerance")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["auto", "general_b", "b_negative_schauder", "b_one_ward",
                                      "b_minus_one_odd"])
    p.add_argument("--out", default=".", help="output directory for solve")
    return p


def main(argv=None) -> int:
    level = os.environ.get("PHI_BVP_LOG", "off").lower()
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level={"debug": logging.DEBUG, "info": logging.INFO}.get(level, logging.CRITICAL + 1))
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (DSLError, MalformedCSV, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
