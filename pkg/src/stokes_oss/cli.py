"""Command-line interface: ``stokes-oss {mesh,solve,study,export}``.

Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 solver failure,
4 study finished only partially.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .eigsolve import EigenSolverError
from .export import export_vtk, fields_document, fmt_number, read_fields, write_fields
from .fespace import PRESSURE, STRESS, VELOCITY
from .mesh import MeshError, build_mesh, mesh_stats, read_mesh, write_mesh
from .oss import CONSISTENT, LUMPED
from .sparse import SingularMatrixError
from .study import StudyError, emit_report, load_config, run_convergence_study, write_report
from .system import AssemblyError
from .three_field import ThreeFieldParams, assemble_three_field
from .two_field import TwoFieldParams, assemble_two_field

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_SOLVER, EXIT_PARTIAL = 0, 1, 2, 3, 4
ANOMALY_FACTOR = 10.0


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stokes-oss",
                                     description="Stabilized equal-order Stokes eigenvalue solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate a benchmark mesh")
    p.add_argument("--domain", choices=["square", "lshape", "cracked"], required=True)
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=_positive_int, help="divisions per (short) side")
    size.add_argument("--target-vertices", type=_positive_int, help="vertex count for the cracked square")
    p.add_argument("--out", required=True, help="output mesh file (JSON)")

    p = sub.add_parser("solve", help="solve the eigenproblem on a benchmark mesh")
    p.add_argument("--formulation", choices=["two-field", "three-field"], default="two-field")
    p.add_argument("--domain", choices=["square", "lshape", "cracked"], default="square")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--n", type=_positive_int)
    size.add_argument("--target-vertices", type=_positive_int)
    p.add_argument("--order", type=int, choices=[1, 2], default=1)
    p.add_argument("--k", type=_positive_int, default=1, help="number of eigenvalues")
    p.add_argument("--mu", type=_positive_float, default=1.0, help="viscosity")
    for name in ("c1", "c2", "c3", "c4", "c5"):
        p.add_argument(f"--{name}", type=_nonneg_float, default=None)
    p.add_argument("--projection", choices=[CONSISTENT, LUMPED], default=CONSISTENT)
    p.add_argument("--anomaly-constants", action="store_true",
                   help=f"scale the default constants by {ANOMALY_FACTOR:g}, solve at least 10 "
                   "modes and report deviations from the default-constant spectrum")
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--out-prefix", default=None,
                   help="write <prefix>.mesh.json and <prefix>.fields.json")

    p = sub.add_parser("study", help="run a convergence study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("export", help="convert a fields file to legacy VTK")
    p.add_argument("--fields", required=True, help="prefix of <prefix>.fields.json")
    p.add_argument("--mesh", required=True)
    p.add_argument("--mode", type=_positive_int, default=1, help="1-based mode index")
    p.add_argument("--out", required=True)
    return parser


def _check_writable(path) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {parent}")


def _params(args):
    factor = ANOMALY_FACTOR if args.anomaly_constants else 1.0
    if args.formulation == "two-field":
        d = TwoFieldParams()
        return TwoFieldParams(args.mu, *(
            getattr(args, c) if getattr(args, c) is not None else factor * getattr(d, c)
            for c in ("c1", "c2")))
    d = ThreeFieldParams()
    return ThreeFieldParams(args.mu, *(
        getattr(args, c) if getattr(args, c) is not None else factor * getattr(d, c)
        for c in ("c3", "c4", "c5")))


def cmd_mesh(args, out) -> int:
    size = args.n if args.n is not None else args.target_vertices
    if args.domain == "cracked" and args.target_vertices is None:
        raise UsageError("the cracked domain takes --target-vertices")
    if args.domain != "cracked" and args.n is None:
        raise UsageError(f"the {args.domain} domain takes --n")
    _check_writable(args.out)
    mesh = build_mesh(args.domain, size)
    write_mesh(mesh, args.out)
    print(json.dumps(mesh_stats(mesh).as_dict()), file=out)
    return EXIT_OK


def cmd_solve(args, out) -> int:
    size = args.n if args.n is not None else args.target_vertices
    if args.out_prefix is not None:
        _check_writable(args.out_prefix + ".fields.json")
    mesh = build_mesh(args.domain, size)
    params = _params(args)
    assemble = assemble_two_field if args.formulation == "two-field" else assemble_three_field
    system = assemble(mesh, args.order, params, projection=args.projection)
    k = max(args.k, 10) if args.anomaly_constants else args.k
    sol = system.eigensolve(k, args.tol)
    print(f"# {args.formulation} {args.domain} size={size} P{args.order} dofs={system.A.shape[0]}",
          file=out)
    print("# index lambda residual", file=out)
    modes = []
    for i, pair in enumerate(sol.pairs):
        print(f"{i + 1} {fmt_number(pair.lam)} {pair.residual:.3e}", file=out)
        f = sol.fields(i)
        modes.append({"lambda": pair.lam, "residual": pair.residual, "velocity": f[VELOCITY],
                      "pressure": f[PRESSURE][0], "stress": f.get(STRESS)})
    if args.anomaly_constants:
        _report_anomaly(args, mesh, assemble, sol, out)
    if args.out_prefix is not None:
        write_mesh(mesh, args.out_prefix + ".mesh.json")
        write_fields(args.out_prefix + ".fields.json",
                     fields_document(args.order, args.formulation, modes))
    return EXIT_OK


def _report_anomaly(args, mesh, assemble, sol, out, threshold=0.01):
    """Compare the scaled-constant spectrum with the default-constant one."""
    base_args = argparse.Namespace(**{**vars(args), "anomaly_constants": False})
    base = assemble(mesh, args.order, _params(base_args), projection=args.projection)
    ref = base.eigensolve(len(sol.pairs), args.tol).eigenvalues
    print(f"# scaled constants ({ANOMALY_FACTOR:g}x) vs defaults: index scaled default rel_diff",
          file=out)
    for i, (lam, lam0) in enumerate(zip(sol.eigenvalues, ref)):
        rel = (lam - lam0) / lam0
        flag = " deviates" if abs(rel) > threshold else ""
        print(f"{i + 1} {fmt_number(lam)} {fmt_number(lam0)} {rel:.3e}{flag}", file=out)


def cmd_study(args, out) -> int:
    if not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    try:
        config = load_config(args.config)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid study config: {exc}") from None
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    _check_writable(Path(args.out_dir) / "probe")
    try:
        report = run_convergence_study(config)
    except StudyError as exc:
        write_report(exc.report, args.out_dir)
        print(emit_report(exc.report, "markdown"), file=out, end="")
        print(f"error: study incomplete: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    write_report(report, args.out_dir)
    print(emit_report(report, "markdown"), file=out, end="")
    return EXIT_OK


def cmd_export(args, out) -> int:
    _check_writable(args.out)
    doc = read_fields(args.fields + ".fields.json")
    mesh = read_mesh(args.mesh)
    modes = doc["modes"]
    if args.mode > len(modes):
        raise UsageError(f"mode {args.mode} requested, file has {len(modes)}")
    try:
        text = export_vtk(mesh, modes[args.mode - 1], doc["order"])
    except ValueError as exc:
        raise UsageError(f"fields and mesh are inconsistent: {exc}") from None
    Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "study": cmd_study, "export": cmd_export}


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EigenSolverError, AssemblyError, SingularMatrixError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
