"""Assembly of the Poisson systems.

Two discretizations share the machinery:
  * the boundary-shifted method: trial functions interpolate at nodes
    shifted onto the true surface (non-symmetric square system, test
    functions are the standard Lagrange basis vanishing on Gamma_h);
  * the polyhedral baseline: standard Galerkin with Dirichlet values
    imposed at the Gamma_h nodes themselves (symmetric system).

Dirichlet columns are eliminated into the right-hand side, keeping the
system square over the free (non-Gamma_h) nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dofs import LagrangeNodeSet, build_lagrange_nodes
from .elements import AffineMap, shape_gradients, shape_values, tet_quadrature
from .meshgen import BoundaryClassification, Mesh
from .surfaces import Surface
from .trialspace import (
    ModifiedElementBasis,
    ShiftedNodeTable,
    build_modified_basis,
    build_shifted_node_table,
)


@dataclass
class DofMap:
    """Equation numbering: one equation per Lagrangian node not on Gamma_h."""

    nodes: LagrangeNodeSet
    gamma_mask: np.ndarray
    eq_of_node: np.ndarray  # -1 for Dirichlet nodes
    n_eq: int

    @classmethod
    def build(cls, nodes: LagrangeNodeSet, gamma_mask):
        eq = np.full(nodes.n_nodes, -1, dtype=np.int64)
        free = np.nonzero(~gamma_mask)[0]
        eq[free] = np.arange(free.size)
        return cls(nodes=nodes, gamma_mask=gamma_mask, eq_of_node=eq, n_eq=free.size)


@dataclass
class LinearSystem:
    A: sp.csr_matrix
    b: np.ndarray
    dofmap: DofMap
    symmetric: bool
    #: per-tet coefficient matrices of the modified bases (boundary tets only)
    element_bases: dict = field(default_factory=dict)
    #: Dirichlet value per Gamma_h node
    dirichlet: dict = field(default_factory=dict)
    shift_table: ShiftedNodeTable | None = None


def element_stiffness(amap: AffineMap, degree: int, quad):
    """Standard Lagrange stiffness matrix of one tet."""
    grads = shape_gradients(degree, quad.points)  # (n_q, n_k, 3)
    phys = grads @ amap.Binv  # gradient chain rule: B^{-T} g  ->  g B^{-1}
    S = np.einsum("q,qid,qjd->ij", quad.weights, phys, phys) * amap.detB
    return S


def element_load(amap: AffineMap, degree: int, quad, f):
    vals = shape_values(degree, quad.points)  # (n_q, n_k)
    pts = amap.to_physical(quad.points)
    fq = np.array([f(p) for p in pts])
    return (quad.weights * fq) @ vals * amap.detB


def _scatter(rows, cols, vals, b, A_loc, b_loc, cell, dofmap, dirichlet):
    eq = dofmap.eq_of_node[cell]
    for i_loc, i_eq in enumerate(eq):
        if i_eq < 0:
            continue
        b[i_eq] += b_loc[i_loc]
        for j_loc, j_eq in enumerate(eq):
            if j_eq >= 0:
                rows.append(i_eq)
                cols.append(j_eq)
                vals.append(A_loc[i_loc, j_loc])
            else:
                gval = dirichlet[int(cell[j_loc])]
                if gval != 0.0:
                    b[i_eq] -= A_loc[i_loc, j_loc] * gval


def assemble_new_method(
    mesh: Mesh,
    cls: BoundaryClassification,
    surface: Surface,
    degree: int,
    f,
    g,
    nodes: LagrangeNodeSet | None = None,
) -> LinearSystem:
    """Petrov-Galerkin system with the boundary-shifted trial basis."""
    if cls.violations:
        raise ValueError(
            "mesh violates the one-face-or-one-edge boundary assumption: "
            + "; ".join(cls.violations[:5])
        )
    if nodes is None:
        nodes = build_lagrange_nodes(mesh, degree)
    table = build_shifted_node_table(mesh, cls, surface, nodes)
    dofmap = DofMap.build(nodes, table.gamma_mask)
    dirichlet = table.dirichlet_values(g)

    quad = tet_quadrature(5)
    o_set = {}
    for t in cls.o_tets:
        o_set[t] = build_modified_basis(mesh, nodes, table, t)

    rows, colsL, vals = [], [], []
    b = np.zeros(dofmap.n_eq)
    for t in range(mesh.n_tets):
        amap = AffineMap.from_vertices(mesh.vertices[mesh.tets[t]])
        S = element_stiffness(amap, degree, quad)
        if t in o_set:
            S = S @ o_set[t].C
        b_loc = element_load(amap, degree, quad, f)
        _scatter(rows, colsL, vals, b, S, b_loc, nodes.cell_nodes(t), dofmap, dirichlet)

    A = sp.coo_matrix(
        (vals, (rows, colsL)), shape=(dofmap.n_eq, dofmap.n_eq)
    ).tocsr()
    return LinearSystem(
        A=A,
        b=b,
        dofmap=dofmap,
        symmetric=False,
        element_bases=o_set,
        dirichlet=dirichlet,
        shift_table=table,
    )


def assemble_polyhedral(
    mesh: Mesh,
    cls: BoundaryClassification,
    surface: Surface,
    degree: int,
    f,
    g,
    nodes: LagrangeNodeSet | None = None,
) -> LinearSystem:
    """Standard Galerkin baseline: Dirichlet data moved to Gamma_h.

    The value imposed at a boundary node M is g evaluated at the closest
    point of the true surface (identical to g(M) for the homogeneous
    cases).
    """
    if nodes is None:
        nodes = build_lagrange_nodes(mesh, degree)
    gamma_mask = nodes.gamma_mask(cls)
    dofmap = DofMap.build(nodes, gamma_mask)
    dirichlet = {}
    for n in np.nonzero(gamma_mask)[0]:
        dirichlet[int(n)] = float(g(surface.closest_point(nodes.coords[n])))

    quad = tet_quadrature(5)
    rows, colsL, vals = [], [], []
    b = np.zeros(dofmap.n_eq)
    for t in range(mesh.n_tets):
        amap = AffineMap.from_vertices(mesh.vertices[mesh.tets[t]])
        S = element_stiffness(amap, degree, quad)
        b_loc = element_load(amap, degree, quad, f)
        _scatter(rows, colsL, vals, b, S, b_loc, nodes.cell_nodes(t), dofmap, dirichlet)

    A = sp.coo_matrix(
        (vals, (rows, colsL)), shape=(dofmap.n_eq, dofmap.n_eq)
    ).tocsr()
    return LinearSystem(
        A=A, b=b, dofmap=dofmap, symmetric=True, dirichlet=dirichlet
    )


def element_phi_coefficients(system: LinearSystem, x: np.ndarray):
    """Per-element coefficients of the solution in the standard Lagrange
    basis: (n_tets, n_k).  On boundary elements of the shifted method the
    nodal values (free solution entries + Dirichlet data at shifted nodes)
    are mapped through the modified-basis coefficient matrix."""
    nodes = system.dofmap.nodes
    mesh = nodes.mesh
    out = np.empty((mesh.n_tets, nodes.cell_nodes_table.shape[1]))
    for t in range(mesh.n_tets):
        cell = nodes.cell_nodes(t)
        coef = np.empty(len(cell))
        for i, n in enumerate(cell):
            e = system.dofmap.eq_of_node[n]
            coef[i] = x[e] if e >= 0 else system.dirichlet[int(n)]
        basis = system.element_bases.get(t)
        if basis is not None:
            coef = basis.C @ coef
        out[t] = coef
    return out


def write_matrix_market(system: LinearSystem, path):
    from scipy.io import mmwrite

    mmwrite(str(path), system.A)
