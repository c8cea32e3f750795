"""Batch command-line driver.

Subcommands:
  mesh         generate a case's mesh and export it (VTK + text dump)
  solve        run a single case/refinement and print the error norms
  convergence  run a refinement sequence and emit a CSV + table with EOCs
  check        run the built-in property suite (pytest) for this package

Options may also come from a plain-text config file of key=value lines
(via --config); command-line flags override file entries.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis
from .assembly import write_matrix_market
from .cases import case_registry, get_case
from .dofs import build_lagrange_nodes
from .meshgen import classify_boundary, write_mesh_text, write_vtk

_CONFIG_KEYS = {
    "case", "method", "k", "refine", "out", "sequential", "vtk", "tol",
    "dump_matrix",
}


def _load_config(path):
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError("bad config line (expected key=value): %r" % raw)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError("unknown config key %r" % key)
        values[key] = val
    return values


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="shiftfem",
        description="Poisson solver on curved domains with boundary-shifted "
        "trial functions",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    cases = sorted(case_registry())

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--case", choices=cases)
        p.add_argument(
            "--method", choices=("new", "polyhedral", "nonconforming"),
            default=None,
        )
        p.add_argument("--k", type=int, choices=(2, 3), default=None)
        p.add_argument(
            "--refine",
            help="comma-separated refinement parameters (J or I values)",
        )
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--sequential", action="store_true",
            help="fully deterministic mode (also zeroes timing columns)",
        )
        p.add_argument("--vtk", action="store_true", help="export VTK files")
        p.add_argument("--tol", type=float, default=1e-12,
                       help="solver residual tolerance")
        p.add_argument("--dump-matrix", action="store_true",
                       help="write the system matrix in MatrixMarket format")

    common(sub.add_parser("mesh", help="generate and export a mesh"))
    common(sub.add_parser("solve", help="solve one refinement"))
    common(sub.add_parser("convergence", help="run a refinement study"))
    common(sub.add_parser("check", help="run the built-in property suite"))
    return ap


def _resolve(args):
    cfg = _load_config(args.config) if args.config else {}
    case = args.case or cfg.get("case")
    method = args.method or cfg.get("method", "new")
    k = args.k if args.k is not None else int(cfg.get("k", 2))
    refine = args.refine or cfg.get("refine")
    sequential = args.sequential or cfg.get("sequential", "0") in ("1", "true")
    vtk = args.vtk or cfg.get("vtk", "0") in ("1", "true")
    out = Path(cfg.get("out", args.out) if args.out == "." else args.out)
    if case is None:
        raise ValueError("--case is required")
    params = None
    if refine:
        params = [int(s) for s in str(refine).split(",") if s.strip()]
    return case, method, k, params, out, sequential, vtk


def _default_params(case):
    return list(get_case(case).default_params)


def cmd_mesh(args):
    case, _method, _k, params, out, _seq, _vtk = _resolve(args)
    c = get_case(case)
    out.mkdir(parents=True, exist_ok=True)
    for p in params or _default_params(case)[:1]:
        mesh = c.mesh(p)
        cls = classify_boundary(mesh, c.surface)
        stem = out / ("%s-%d" % (case, p))
        write_vtk(mesh, stem.with_suffix(".vtk"))
        write_mesh_text(mesh, stem.with_suffix(".txt"))
        print(
            "%s param=%d: %d vertices, %d tets, %d surface faces, "
            "|S_h|=%d |R_h|=%d%s"
            % (
                case, p, mesh.n_vertices, mesh.n_tets, len(cls.gamma_faces),
                len(cls.s_tets), len(cls.r_tets),
                "  VIOLATIONS: %d" % len(cls.violations) if cls.violations
                else "",
            )
        )
        print("wrote %s and %s" % (stem.with_suffix(".vtk"),
                                   stem.with_suffix(".txt")))


def cmd_solve(args):
    case, method, k, params, out, seq, vtk = _resolve(args)
    if params is None or len(params) != 1:
        raise ValueError("solve needs exactly one --refine value")
    c = get_case(case)
    rep, mesh, system, solve_report = analysis.run_single(
        c, method, k, params[0], record_time=not seq
    )
    print(
        "%s %s k=%d param=%d: h=%.5e n_dofs=%d" % (case, method, k, params[0],
                                                   rep.h, rep.n_dofs)
    )
    print("  err_h1_broken = %.6e" % rep.err_h1_broken)
    print("  err_l2        = %.6e" % rep.err_l2)
    print("  err_nodal_max = %.6e" % rep.err_nodal_max)
    out.mkdir(parents=True, exist_ok=True)
    table = analysis.ConvergenceTable(
        case=case, method=method, degree=k, params=params, reports=[rep],
        eoc_h1=[None], eoc_l2=[None],
    )
    csv_path = out / ("%s-%s-k%d.csv" % (case, method, k))
    csv_path.write_text(table.to_csv())
    print("wrote %s" % csv_path)
    if getattr(args, "dump_matrix", False):
        mm = out / ("%s-%s-k%d-%d.mtx" % (case, method, k, params[0]))
        write_matrix_market(system, mm)
        print("wrote %s" % mm)
    if vtk:
        _write_solution_vtk(out, case, method, k, params[0], mesh, system,
                            solve_report)


def _write_solution_vtk(out, case, method, k, param, mesh, system, report):
    import numpy as np

    vals = np.zeros(mesh.n_vertices)
    if hasattr(system.dofmap, "eq_of_node"):
        for v in range(mesh.n_vertices):
            e = system.dofmap.eq_of_node[v]
            if e >= 0:
                vals[v] = report.x[e]
            else:
                vals[v] = system.dirichlet.get(v, 0.0)
    path = out / ("%s-%s-k%d-%d-solution.vtk" % (case, method, k, param))
    write_vtk(mesh, path, point_data={"u": vals})
    print("wrote %s" % path)


def cmd_convergence(args):
    case, method, k, params, out, seq, _vtk = _resolve(args)
    if params is None:
        params = _default_params(case)
    if len(params) < 2:
        raise ValueError("convergence needs at least two --refine values")
    c = get_case(case)
    table = analysis.run_convergence(c, method, k, params,
                                     record_time=not seq)
    print(table.to_text())
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / ("%s-%s-k%d.csv" % (case, method, k))
    csv_path.write_text(table.to_csv())
    txt_path = out / ("%s-%s-k%d.txt" % (case, method, k))
    txt_path.write_text(table.to_text())
    print("wrote %s and %s" % (csv_path, txt_path))


def cmd_check(_args):
    import subprocess

    tests = Path(__file__).resolve().parent / "properties.py"
    rc = subprocess.call([sys.executable, "-m", "pytest", "-q", str(tests)])
    if rc != 0:
        raise SystemExit(rc)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {
        "mesh": cmd_mesh,
        "solve": cmd_solve,
        "convergence": cmd_convergence,
        "check": cmd_check,
    }
    try:
        handlers[args.command](args)
    except (ValueError, KeyError, RuntimeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
