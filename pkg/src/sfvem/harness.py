"""Manufactured problems, error measurement, convergence studies, CLI.

The error convention: interpolate the exact solution into the trial
space, project both it and the discrete solution into the macro spaces,
and integrate the difference cell by cell.  Both fields are piecewise
polynomial on the same subdivision, so quadrature of exactness twice
the degree integrates the norms without truncation error.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from .macrofe import field_norms
from .macrosub import check_constraints
from .polymesh import (
    MeshError,
    generate_cube_mesh,
    generate_hexagon_mesh,
    generate_pentagon_mesh,
    mesh_size,
    read_mesh,
    validate_mesh,
    write_mesh,
)
from .projector import build_discretization, interpolate_exact
from .system import SolverConfig, assemble, reconstruct, solve_system

MESH_FAMILIES = {
    "pentagon": (2, generate_pentagon_mesh),
    "hexagon": (2, generate_hexagon_mesh),
    "cube": (3, generate_cube_mesh),
}


class ManufacturedProblem:
    """Exact solution with enough derivatives to drive a full run.

    ``u``, ``grad_u`` and ``laplacian`` take an (n, dim) point array;
    ``hessian`` (required in 3d, where face dofs need second
    derivatives) returns (n, dim, dim).  The source term and Dirichlet
    data follow from the solution: f = -laplacian(u), g = u.
    """

    def __init__(self, problem_id, dimension, u, grad_u, laplacian, hessian=None):
        self.problem_id = problem_id
        self.dimension = int(dimension)
        self.u = u
        self.grad_u = grad_u
        self.laplacian = laplacian
        self.hessian = hessian

    def f(self, points):
        return -self.laplacian(points)

    def dirichlet(self, points):
        return self.u(points)

    def self_check(self, n_points=20, seed=0, tol=1e-5):
        """Compare the stated laplacian against central differences.

        Guards against sign slips in hand-written source terms; raises
        if any sampled point disagrees by more than ``tol``.
        """
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.2, 0.8, size=(n_points, self.dimension))
        step = 1e-4
        fd = -2.0 * self.dimension * self.u(pts)
        for axis in range(self.dimension):
            shift = np.zeros(self.dimension)
            shift[axis] = step
            fd += self.u(pts + shift) + self.u(pts - shift)
        fd /= step * step
        err = np.max(np.abs(fd - self.laplacian(pts)))
        if not err <= tol:
            raise ValueError(
                f"problem {self.problem_id!r}: finite-difference laplacian "
                f"disagrees by {err:.3e}"
            )
        return err


def _make_sinsin2d():
    def u(p):
        return np.sin(np.pi * p[..., 0]) * np.sin(np.pi * p[..., 1])

    def grad_u(p):
        sx, cx = np.sin(np.pi * p[..., 0]), np.cos(np.pi * p[..., 0])
        sy, cy = np.sin(np.pi * p[..., 1]), np.cos(np.pi * p[..., 1])
        return np.pi * np.stack([cx * sy, sx * cy], axis=-1)

    def laplacian(p):
        return -2.0 * np.pi**2 * u(p)

    return ManufacturedProblem("sinsin2d", 2, u, grad_u, laplacian)


def _make_poly3d():
    # u = 2^6 (x - x^2)(y - y^2)(z - z^2), peak value 1 at the center
    def bump(t):
        return t - t * t

    def dbump(t):
        return 1.0 - 2.0 * t

    def u(p):
        return 64.0 * bump(p[..., 0]) * bump(p[..., 1]) * bump(p[..., 2])

    def grad_u(p):
        gx, gy, gz = bump(p[..., 0]), bump(p[..., 1]), bump(p[..., 2])
        dx, dy, dz = dbump(p[..., 0]), dbump(p[..., 1]), dbump(p[..., 2])
        return 64.0 * np.stack([dx * gy * gz, gx * dy * gz, gx * gy * dz], axis=-1)

    def laplacian(p):
        gx, gy, gz = bump(p[..., 0]), bump(p[..., 1]), bump(p[..., 2])
        return -128.0 * (gy * gz + gx * gz + gx * gy)

    def hessian(p):
        gx, gy, gz = bump(p[..., 0]), bump(p[..., 1]), bump(p[..., 2])
        dx, dy, dz = dbump(p[..., 0]), dbump(p[..., 1]), dbump(p[..., 2])
        H = np.empty(p.shape[:-1] + (3, 3))
        H[..., 0, 0] = -2.0 * gy * gz
        H[..., 1, 1] = -2.0 * gx * gz
        H[..., 2, 2] = -2.0 * gx * gy
        H[..., 0, 1] = H[..., 1, 0] = dx * dy * gz
        H[..., 0, 2] = H[..., 2, 0] = dx * gy * dz
        H[..., 1, 2] = H[..., 2, 1] = gx * dy * dz
        return 64.0 * H

    return ManufacturedProblem("poly3d", 3, u, grad_u, laplacian, hessian)


_PROBLEM_MAKERS = {
    "sinsin2d": _make_sinsin2d,
    "poly3d": _make_poly3d,
}


def problem_registry(problem_id):
    """Look up a built-in manufactured problem by id."""
    try:
        maker = _PROBLEM_MAKERS[problem_id]
    except KeyError:
        known = ", ".join(sorted(_PROBLEM_MAKERS))
        raise ValueError(f"unknown problem id {problem_id!r} (known: {known})")
    return maker()


class ErrorReport:
    """Errors of one solve, plus the bookkeeping a rate table needs."""

    def __init__(self, level, h, l2_error, h1_error, n_dofs, iterations):
        self.level = int(level)
        self.h = float(h)
        self.l2_error = float(l2_error)
        self.h1_error = float(h1_error)
        self.n_dofs = int(n_dofs)
        self.iterations = int(iterations)


def error_norms(disc, field, problem, level=0, iterations=0):
    """Measure a solved field against the interpolated exact solution.

    The reference is the projection of the trial-space interpolant of
    ``problem``; the difference to ``field`` lives cell by cell in one
    polynomial space, so its norms are summed from exact per-cell
    integrals.
    """
    x_ref = interpolate_exact(disc, problem)
    ref = reconstruct(disc, x_ref)
    l2_sq = 0.0
    h1_sq = 0.0
    for c, pr in enumerate(disc.projectors):
        diff = field.coefficients[c] - ref.coefficients[c]
        l2, h1 = field_norms(pr.space, diff)
        l2_sq += l2 * l2
        h1_sq += h1 * h1
    l2_error = math.sqrt(l2_sq)
    h1_error = math.sqrt(h1_sq)
    if not (math.isfinite(l2_error) and math.isfinite(h1_error)):
        raise ValueError("non-finite error norm; solve likely diverged")
    return ErrorReport(
        level, mesh_size(disc.mesh), l2_error, h1_error, disc.n_dofs, iterations
    )


class ConvergenceReport:
    """Error reports over a ladder of refinement levels, with rates."""

    def __init__(self, family, degree, problem_id, reports):
        self.family = family
        self.degree = int(degree)
        self.problem_id = problem_id
        self.reports = list(reports)

    @property
    def l2_rates(self):
        return _rates([r.l2_error for r in self.reports])

    @property
    def h1_rates(self):
        return _rates([r.h1_error for r in self.reports])

    def rows(self):
        """CSV rows: grid,l2_err,l2_rate,h1_err,h1_rate,ndof,iters."""
        out = []
        for r, lr, hr in zip(self.reports, self.l2_rates, self.h1_rates):
            out.append(
                {
                    "grid": r.level,
                    "l2_err": r.l2_error,
                    "l2_rate": lr,
                    "h1_err": r.h1_error,
                    "h1_rate": hr,
                    "ndof": r.n_dofs,
                    "iters": r.iterations,
                }
            )
        return out

    def summary(self):
        lines = [
            f"family={self.family} degree={self.degree} problem={self.problem_id}",
            f"{'grid':>4} {'l2_err':>12} {'rate':>6} {'h1_err':>12} "
            f"{'rate':>6} {'ndof':>8} {'iters':>6}",
        ]
        for row in self.rows():
            lr = "" if row["l2_rate"] is None else f"{row['l2_rate']:.2f}"
            hr = "" if row["h1_rate"] is None else f"{row['h1_rate']:.2f}"
            lines.append(
                f"{row['grid']:>4} {row['l2_err']:>12.4e} {lr:>6} "
                f"{row['h1_err']:>12.4e} {hr:>6} {row['ndof']:>8} {row['iters']:>6}"
            )
        return "\n".join(lines)


def _rates(errors):
    """log2 ratios between consecutive entries; None where undefined."""
    rates = [None]
    for prev, cur in zip(errors, errors[1:]):
        if prev > 0 and cur > 0:
            rates.append(math.log2(prev / cur))
        else:
            rates.append(None)
    return rates


CSV_HEADER = "grid,l2_err,l2_rate,h1_err,h1_rate,ndof,iters"


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def write_csv(report, path):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in report.rows():
            fh.write(
                ",".join(_fmt(row[k]) for k in CSV_HEADER.split(",")) + "\n"
            )


def read_csv(path):
    """Parse a convergence CSV back into typed row dicts."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    keys = CSV_HEADER.split(",")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(keys):
            raise ValueError(f"{path}: malformed row {ln!r}")
        row = {}
        for key, text in zip(keys, parts):
            if text == "":
                row[key] = None
            elif key in ("grid", "ndof", "iters"):
                row[key] = int(text)
            else:
                row[key] = float(text)
        rows.append(row)
    return rows


def convergence_study(
    family, degree, levels, problem, strategy="auto", solver_config=None
):
    """Solve one manufactured problem over consecutive mesh levels."""
    if isinstance(problem, str):
        problem = problem_registry(problem)
    dim, generator = MESH_FAMILIES[family]
    if problem.dimension != dim:
        raise ValueError(
            f"problem {problem.problem_id!r} is {problem.dimension}d, "
            f"family {family!r} is {dim}d"
        )
    reports = []
    for level in levels:
        mesh = generator(level)
        disc = build_discretization(mesh, degree, strategy=strategy)
        system = assemble(
            disc, f=problem.f, boundary_values=interpolate_exact(disc, problem)
        )
        result = solve_system(system, solver_config)
        field = reconstruct(disc, result.x)
        reports.append(
            error_norms(disc, field, problem, level=level, iterations=result.iterations)
        )
    return ConvergenceReport(family, degree, problem.problem_id, reports)


# ---------------------------------------------------------------------------
# command line


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sfvem",
        description="Stabilizer-free virtual element solver for Poisson problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_mesh = sub.add_parser("mesh", help="generate a mesh family member")
    p_mesh.add_argument("--family", required=True, choices=sorted(MESH_FAMILIES))
    p_mesh.add_argument("--level", required=True, type=int)
    p_mesh.add_argument("--out", required=True)

    p_check = sub.add_parser("check", help="validate a mesh and its subdivisions")
    p_check.add_argument("--mesh", required=True)
    p_check.add_argument("--degree", required=True, type=int)
    p_check.add_argument(
        "--strategy", default="auto", choices=("auto", "kuhn", "center")
    )

    p_solve = sub.add_parser("solve", help="solve a manufactured problem")
    p_solve.add_argument("--mesh", required=True)
    p_solve.add_argument("--degree", required=True, type=int)
    p_solve.add_argument("--problem", required=True)
    p_solve.add_argument(
        "--strategy", default="auto", choices=("auto", "kuhn", "center")
    )
    p_solve.add_argument("--out")
    p_solve.add_argument("--errors", action="store_true")

    p_conv = sub.add_parser("converge", help="run a convergence study")
    p_conv.add_argument("--family", required=True, choices=sorted(MESH_FAMILIES))
    p_conv.add_argument("--degree", required=True, type=int)
    p_conv.add_argument("--levels", required=True)
    p_conv.add_argument("--problem", required=True)
    p_conv.add_argument(
        "--strategy", default="auto", choices=("auto", "kuhn", "center")
    )
    p_conv.add_argument("--csv", required=True)
    return parser


def _parse_levels(text):
    lo, sep, hi = text.partition("..")
    if sep != "..":
        raise ValueError(f"levels must look like A..B, got {text!r}")
    lo, hi = int(lo), int(hi)
    if lo < 1 or hi < lo:
        raise ValueError(f"levels {text!r} must satisfy 1 <= A <= B")
    return list(range(lo, hi + 1))


def _require(condition, parser, message):
    # argparse exits with code 2 and prints usage to stderr; reuse that
    if not condition:
        parser.error(message)


def _cmd_mesh(args, parser):
    _require(args.level >= 1, parser, "--level must be >= 1")
    _, generator = MESH_FAMILIES[args.family]
    mesh = generator(args.level)
    write_mesh(mesh, args.out)
    n_faces = f" faces={mesh.n_faces}" if hasattr(mesh, "n_faces") else ""
    print(
        f"wrote {args.out}: {args.family} level {args.level}, "
        f"vertices={mesh.n_vertices} cells={mesh.n_cells}{n_faces}"
    )
    return 0


def _load_mesh(path):
    try:
        return read_mesh(path)
    except (OSError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def _cmd_check(args, parser):
    _require(args.degree >= 1, parser, "--degree must be >= 1")
    mesh = _load_mesh(args.mesh)
    if mesh is None:
        return 1
    report = validate_mesh(mesh)
    print(report.summary())
    if not report.passed:
        return 1
    disc = build_discretization(mesh, args.degree, strategy=args.strategy)
    bad = 0
    for c, sub in enumerate(disc.subs):
        for check in check_constraints(sub).failures:
            print(f"[FAIL] cell {c}: {check.name}  {check.detail}")
            bad += 1
    n_sub = sum(s.n_simplices for s in disc.subs)
    print(
        f"cells={mesh.n_cells} sub-simplices={n_sub} "
        f"degree={args.degree} dofs={disc.n_dofs} "
        f"free={int(np.count_nonzero(~disc.layout.boundary))}"
    )
    if bad:
        print(f"{bad} subdivision constraint(s) failed", file=sys.stderr)
        return 1
    print("all checks passed")
    return 0


def _solution_payload(args, disc, result, field, report):
    with open(args.mesh, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    payload = {
        "mesh": {"path": args.mesh, "sha256": digest},
        "degree": disc.degree,
        "dofs": result.x.tolist(),
        "macro_coefficients": [c.tolist() for c in field.coefficients],
        "errors": None,
    }
    if report is not None:
        payload["errors"] = {"l2": report.l2_error, "h1": report.h1_error}
    return payload


def _cmd_solve(args, parser):
    _require(args.degree >= 1, parser, "--degree must be >= 1")
    try:
        problem = problem_registry(args.problem)
    except ValueError as exc:
        parser.error(str(exc))
    mesh = _load_mesh(args.mesh)
    if mesh is None:
        return 1
    dim = mesh.vertices.shape[1]
    _require(
        problem.dimension == dim,
        parser,
        f"problem {args.problem!r} is {problem.dimension}d, mesh is {dim}d",
    )
    report = validate_mesh(mesh)
    if not report.passed:
        print(report.summary(), file=sys.stderr)
        return 1
    disc = build_discretization(mesh, args.degree, strategy=args.strategy)
    system = assemble(
        disc, f=problem.f, boundary_values=interpolate_exact(disc, problem)
    )
    result = solve_system(system)
    field = reconstruct(disc, result.x)
    print(
        f"solved: dofs={disc.n_dofs} free={system.n_free} "
        f"method={result.method} iterations={result.iterations}"
    )
    err = None
    if args.errors:
        err = error_norms(disc, field, problem, iterations=result.iterations)
        print(f"l2_error={err.l2_error:.6e} h1_error={err.h1_error:.6e}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(_solution_payload(args, disc, result, field, err), fh)
        print(f"wrote {args.out}")
    return 0


def _cmd_converge(args, parser):
    _require(args.degree >= 1, parser, "--degree must be >= 1")
    try:
        levels = _parse_levels(args.levels)
        problem = problem_registry(args.problem)
    except ValueError as exc:
        parser.error(str(exc))
    dim, _ = MESH_FAMILIES[args.family]
    _require(
        problem.dimension == dim,
        parser,
        f"problem {args.problem!r} is {problem.dimension}d, "
        f"family {args.family!r} is {dim}d",
    )
    report = convergence_study(
        args.family, args.degree, levels, problem, strategy=args.strategy
    )
    write_csv(report, args.csv)
    print(report.summary())
    print(f"wrote {args.csv}")
    return 0


_COMMANDS = {
    "mesh": _cmd_mesh,
    "check": _cmd_check,
    "solve": _cmd_solve,
    "converge": _cmd_converge,
}


def cli(argv=None):
    """Run one command; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return _COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        # parser.error inside a command handler
        return 0 if exc.code in (0, None) else 2


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
