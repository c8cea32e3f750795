"""Error norms over the mesh domain, convergence orders, and the CSV /
table reporting used by the command-line driver.
"""
from __future__ import annotations

import io
import time
from dataclasses import dataclass

import numpy as np

from .assembly import (
    assemble_new_method,
    assemble_polyhedral,
    element_phi_coefficients,
)
from .cases import ExactCase
from .dofs import build_lagrange_nodes
from .elements import (
    AffineMap,
    reference_nodes,
    refined_quadrature,
    shape_gradients,
    shape_values,
    tet_quadrature,
)
from .linsolve import solve
from .meshgen import classify_boundary
from .nonconforming import nc_assemble, nc_element_phi_coefficients

CSV_HEADER = (
    "case,method,k,param,h,n_dofs,err_h1_broken,err_l2,err_nodal_max,"
    "eoc_h1,eoc_l2,solve_seconds"
)


@dataclass
class ErrorReport:
    h: float
    n_dofs: int
    err_h1_broken: float
    err_l2: float
    err_nodal_max: float
    solve_seconds: float


def error_norms(mesh, degree, phi_coeffs, u, grad_u, quad=None):
    """Broken-H1 seminorm error, L2 error, and max nodal error of a
    piecewise-P_k function given by per-element Lagrange coefficients.

    The error integrands are not polynomial (and the squared L2 integrand
    alone has degree 2(k+2)), so the norms use a once-refined composite of
    the 15-point rule (8 sub-tets, 120 points); this matches a further
    refined oracle rule to well below the reported digits."""
    if quad is None:
        quad = refined_quadrature(5, 1)
    vals = shape_values(degree, quad.points)  # (n_q, n_k)
    grads = shape_gradients(degree, quad.points)  # (n_q, n_k, 3)
    ref_nodes = reference_nodes(degree)
    node_vals = shape_values(degree, ref_nodes)  # identity, kept for clarity

    h1_sq = 0.0
    l2_sq = 0.0
    nodal_max = 0.0
    for t in range(mesh.n_tets):
        amap = AffineMap.from_vertices(mesh.vertices[mesh.tets[t]])
        a = phi_coeffs[t]
        pts = amap.to_physical(quad.points)
        uh = vals @ a
        guh = np.einsum("qmd,m->qd", grads @ amap.Binv, a)
        ue = np.array([u(p) for p in pts])
        gue = np.array([grad_u(p) for p in pts])
        l2_sq += float(quad.weights @ (uh - ue) ** 2) * amap.detB
        h1_sq += float(quad.weights @ ((guh - gue) ** 2).sum(axis=1)) * amap.detB
        npts = amap.to_physical(ref_nodes)
        u_nodes = node_vals @ a
        nodal_max = max(
            nodal_max, float(np.max(np.abs(u_nodes - [u(p) for p in npts])))
        )
    return float(np.sqrt(h1_sq)), float(np.sqrt(l2_sq)), nodal_max


def eoc(e1, e2, h1, h2):
    """Estimated order of convergence between two refinements."""
    if min(e1, e2, h1, h2) <= 0.0 or h2 >= h1:
        raise ValueError("eoc needs positive errors and h1 > h2")
    return float(np.log(e1 / e2) / np.log(h1 / h2))


def run_single(case: ExactCase, method: str, degree: int, param,
               record_time=True):
    """Mesh, assemble, solve, and measure one case/refinement combination."""
    if method == "nonconforming" and degree != 2:
        raise ValueError("the nonconforming element only exists for k=2")
    mesh = case.mesh(param)
    cls = classify_boundary(mesh, case.surface)

    t0 = time.perf_counter()
    if method == "new":
        system = assemble_new_method(
            mesh, cls, case.surface, degree, case.f, case.g
        )
        report = solve(system)
        coeffs = element_phi_coefficients(system, report.x)
    elif method == "polyhedral":
        system = assemble_polyhedral(
            mesh, cls, case.surface, degree, case.f, case.g
        )
        report = solve(system)
        coeffs = element_phi_coefficients(system, report.x)
    elif method == "nonconforming":
        system = nc_assemble(mesh, cls, case.surface, case.f)
        report = solve(system)
        coeffs = nc_element_phi_coefficients(system, report.x)
    else:
        raise ValueError("unknown method %r" % method)
    seconds = time.perf_counter() - t0

    e_h1, e_l2, e_nodal = error_norms(mesh, degree, coeffs, case.u, case.grad_u)
    return ErrorReport(
        h=float(case.h_of_param(param)),
        n_dofs=int(system.dofmap.n_eq),
        err_h1_broken=e_h1,
        err_l2=e_l2,
        err_nodal_max=e_nodal,
        solve_seconds=seconds if record_time else 0.0,
    ), mesh, system, report


@dataclass
class ConvergenceTable:
    case: str
    method: str
    degree: int
    params: list
    reports: list  # ErrorReport per refinement
    eoc_h1: list  # None for the first row
    eoc_l2: list

    def to_csv(self):
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for p, rep, oh, ol in zip(self.params, self.reports, self.eoc_h1,
                                  self.eoc_l2):
            out.write(
                "%s,%s,%d,%s,%.12g,%d,%.12g,%.12g,%.12g,%s,%s,%.6g\n"
                % (
                    self.case,
                    self.method,
                    self.degree,
                    p,
                    rep.h,
                    rep.n_dofs,
                    rep.err_h1_broken,
                    rep.err_l2,
                    rep.err_nodal_max,
                    "" if oh is None else "%.6g" % oh,
                    "" if ol is None else "%.6g" % ol,
                    rep.solve_seconds,
                )
            )
        return out.getvalue()

    def to_text(self):
        lines = [
            "case=%s method=%s k=%d" % (self.case, self.method, self.degree),
            "%6s %12s %8s %14s %8s %14s %8s %14s"
            % ("param", "h", "n_dofs", "err_h1_broken", "eoc", "err_l2",
               "eoc", "err_nodal_max"),
        ]
        for p, rep, oh, ol in zip(self.params, self.reports, self.eoc_h1,
                                  self.eoc_l2):
            lines.append(
                "%6s %12.5e %8d %14.6e %8s %14.6e %8s %14.6e"
                % (
                    p,
                    rep.h,
                    rep.n_dofs,
                    rep.err_h1_broken,
                    "-" if oh is None else "%.3f" % oh,
                    rep.err_l2,
                    "-" if ol is None else "%.3f" % ol,
                    rep.err_nodal_max,
                )
            )
        return "\n".join(lines) + "\n"


def run_convergence(case: ExactCase, method: str, degree: int, params,
                    record_time=True) -> ConvergenceTable:
    params = list(params)
    if len(params) < 1:
        raise ValueError("need at least one refinement parameter")
    hs = [case.h_of_param(p) for p in params]
    if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("refinement parameters must make h strictly decrease")

    reports = []
    for p in params:
        rep, *_ = run_single(case, method, degree, p, record_time=record_time)
        reports.append(rep)

    eoc_h1, eoc_l2 = [None], [None]
    for prev, cur in zip(reports, reports[1:]):
        eoc_h1.append(eoc(prev.err_h1_broken, cur.err_h1_broken, prev.h, cur.h))
        eoc_l2.append(eoc(prev.err_l2, cur.err_l2, prev.h, cur.h))
    return ConvergenceTable(
        case=case.name,
        method=method,
        degree=degree,
        params=params,
        reports=reports,
        eoc_h1=eoc_h1,
        eoc_l2=eoc_l2,
    )
