"""Reference tetrahedron: Lagrange elements of degree 2 and 3, quadrature,
and the affine map between reference and physical elements.

Reference tetrahedron: vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1).
Barycentric coordinates: lam0 = 1-x-y-z, lam1 = x, lam2 = y, lam3 = z.

Local node ordering (frozen; the degree-of-freedom map relies on it):
  * 4 vertex nodes, in vertex order 0..3
  * edge nodes, edges in the canonical order
      (0,1), (0,2), (0,3), (1,2), (1,3), (2,3);
    degree 2: one midpoint per edge; degree 3: two nodes per edge, the
    node nearer the first vertex of the pair first
  * degree 3 only: one centroid node per face, faces ordered by opposite
    vertex: (1,2,3), (0,2,3), (0,1,3), (0,1,2)
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))

REF_VERTICES = np.array(
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)

# gradients of the four barycentric coordinates w.r.t. (x, y, z)
_BARY_GRADS = np.array(
    [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)


def barycentric(points):
    """Barycentric coordinates, shape (n, 4), of reference points (n, 3)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lam = np.empty((pts.shape[0], 4))
    lam[:, 0] = 1.0 - pts.sum(axis=1)
    lam[:, 1:] = pts
    return lam


def node_count(degree: int) -> int:
    return {2: 10, 3: 20}[degree]


@lru_cache(maxsize=None)
def reference_nodes(degree: int) -> np.ndarray:
    """Lagrangian node coordinates on the reference tet, frozen ordering."""
    if degree not in (2, 3):
        raise ValueError("only degrees 2 and 3 are supported")
    nodes = [REF_VERTICES[i] for i in range(4)]
    for a, b in EDGES:
        if degree == 2:
            nodes.append(0.5 * (REF_VERTICES[a] + REF_VERTICES[b]))
        else:
            nodes.append((2.0 * REF_VERTICES[a] + REF_VERTICES[b]) / 3.0)
            nodes.append((REF_VERTICES[a] + 2.0 * REF_VERTICES[b]) / 3.0)
    if degree == 3:
        for f in FACES:
            nodes.append(REF_VERTICES[list(f)].mean(axis=0))
    return np.array(nodes)


def shape_values(degree: int, points) -> np.ndarray:
    """Values of all shape functions at reference points: (n_pts, n_nodes)."""
    lam = barycentric(points)
    cols = []
    if degree == 2:
        for i in range(4):
            cols.append(lam[:, i] * (2.0 * lam[:, i] - 1.0))
        for a, b in EDGES:
            cols.append(4.0 * lam[:, a] * lam[:, b])
    elif degree == 3:
        for i in range(4):
            li = lam[:, i]
            cols.append(0.5 * li * (3.0 * li - 1.0) * (3.0 * li - 2.0))
        for a, b in EDGES:
            la, lb = lam[:, a], lam[:, b]
            cols.append(4.5 * la * lb * (3.0 * la - 1.0))
            cols.append(4.5 * la * lb * (3.0 * lb - 1.0))
        for a, b, c in FACES:
            cols.append(27.0 * lam[:, a] * lam[:, b] * lam[:, c])
    else:
        raise ValueError("only degrees 2 and 3 are supported")
    return np.stack(cols, axis=1)


def shape_gradients(degree: int, points) -> np.ndarray:
    """Reference gradients of all shape functions: (n_pts, n_nodes, 3)."""
    lam = barycentric(points)
    g = _BARY_GRADS
    cols = []
    if degree == 2:
        for i in range(4):
            cols.append(np.outer(4.0 * lam[:, i] - 1.0, g[i]))
        for a, b in EDGES:
            cols.append(4.0 * (np.outer(lam[:, b], g[a]) + np.outer(lam[:, a], g[b])))
    elif degree == 3:
        for i in range(4):
            li = lam[:, i]
            dpoly = 13.5 * li * li - 9.0 * li + 1.0
            cols.append(np.outer(dpoly, g[i]))
        for a, b in EDGES:
            la, lb = lam[:, a], lam[:, b]
            cols.append(
                4.5
                * (
                    np.outer(lb * (6.0 * la - 1.0), g[a])
                    + np.outer(la * (3.0 * la - 1.0), g[b])
                )
            )
            cols.append(
                4.5
                * (
                    np.outer(lb * (3.0 * lb - 1.0), g[a])
                    + np.outer(la * (6.0 * lb - 1.0), g[b])
                )
            )
        for a, b, c in FACES:
            la, lb, lc = lam[:, a], lam[:, b], lam[:, c]
            cols.append(
                27.0
                * (
                    np.outer(lb * lc, g[a])
                    + np.outer(la * lc, g[b])
                    + np.outer(la * lb, g[c])
                )
            )
    else:
        raise ValueError("only degrees 2 and 3 are supported")
    return np.stack(cols, axis=1)


@dataclass
class AffineMap:
    """Affine map x = v0 + B x_hat from the reference tet to a physical tet."""

    v0: np.ndarray
    B: np.ndarray
    Binv: np.ndarray
    detB: float

    @classmethod
    def from_vertices(cls, verts):
        verts = np.asarray(verts, dtype=float)
        v0 = verts[0]
        B = (verts[1:] - v0).T
        detB = float(np.linalg.det(B))
        if detB <= 0.0:
            raise ValueError("tetrahedron is degenerate or negatively oriented")
        return cls(v0=v0, B=B, Binv=np.linalg.inv(B), detB=detB)

    def to_physical(self, ref_points):
        pts = np.atleast_2d(np.asarray(ref_points, dtype=float))
        return self.v0 + pts @ self.B.T

    def to_reference(self, phys_points):
        pts = np.atleast_2d(np.asarray(phys_points, dtype=float))
        return (pts - self.v0) @ self.Binv.T

    @property
    def volume(self):
        return self.detB / 6.0


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 3) reference coordinates
    weights: np.ndarray  # (n,), sums to 1/6 (reference tet volume)
    degree: int


def _rule_points_from_bary(bary_rows):
    bary = np.array(bary_rows)
    return bary[:, 1:]


@lru_cache(maxsize=None)
def tet_quadrature(degree: int) -> QuadratureRule:
    """Symmetric quadrature on the reference tet, exact to `degree`.

    degree <= 2: 4-point rule; degree <= 5: 15-point rule.
    """
    if degree <= 2:
        a = (5.0 + 3.0 * np.sqrt(5.0)) / 20.0
        b = (5.0 - np.sqrt(5.0)) / 20.0
        bary = []
        for i in range(4):
            row = [b, b, b, b]
            row[i] = a
            bary.append(row)
        w = np.full(4, 1.0 / 24.0)
        return QuadratureRule(_rule_points_from_bary(bary), w, 2)
    if degree <= 5:
        s15 = np.sqrt(15.0)
        a1 = (7.0 - s15) / 34.0
        a2 = (7.0 + s15) / 34.0
        a3 = (10.0 - 2.0 * s15) / 40.0
        b3 = (10.0 + 2.0 * s15) / 40.0
        w0 = 8.0 / 405.0
        w1 = (2665.0 + 14.0 * s15) / 226800.0
        w2 = (2665.0 - 14.0 * s15) / 226800.0
        w3 = 5.0 / 567.0
        bary = [[0.25, 0.25, 0.25, 0.25]]
        weights = [w0]
        for a, w in ((a1, w1), (a2, w2)):
            b = 1.0 - 3.0 * a
            for i in range(4):
                row = [a, a, a, a]
                row[i] = b
                bary.append(row)
                weights.append(w)
        pair_positions = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        for i, j in pair_positions:
            row = [b3, b3, b3, b3]
            row[i] = a3
            row[j] = a3
            bary.append(row)
            weights.append(w3)
        return QuadratureRule(_rule_points_from_bary(bary), np.array(weights), 5)
    raise ValueError("no rule of degree > 5 available")


def refined_quadrature(degree: int, levels: int) -> QuadratureRule:
    """Composite rule: red-refine the reference tet `levels` times and apply
    the base rule on each sub-tet.  Used as an independent integration
    oracle in the tests and for error norms of non-polynomial integrands.
    """
    base = tet_quadrature(degree)
    tets = [REF_VERTICES.copy()]
    for _ in range(levels):
        tets = [sub for t in tets for sub in _red_refine(t)]
    pts, wts = [], []
    for verts in tets:
        amap = AffineMap.from_vertices(verts)
        pts.append(amap.to_physical(base.points))
        wts.append(base.weights * (abs(amap.detB)))
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), base.degree)


def _red_refine(verts):
    """Split one tet into 8 (4 corner tets + 4 from the inner octahedron)."""
    v = np.asarray(verts, dtype=float)
    m = {}
    for a, b in EDGES:
        m[(a, b)] = 0.5 * (v[a] + v[b])
    corner = [
        [v[0], m[(0, 1)], m[(0, 2)], m[(0, 3)]],
        [m[(0, 1)], v[1], m[(1, 2)], m[(1, 3)]],
        [m[(0, 2)], m[(1, 2)], v[2], m[(2, 3)]],
        [m[(0, 3)], m[(1, 3)], m[(2, 3)], v[3]],
    ]
    # octahedron split along the (0,1)-(2,3) diagonal
    d0, d1 = m[(0, 1)], m[(2, 3)]
    octa = [
        [d0, d1, m[(0, 2)], m[(0, 3)]],
        [d0, d1, m[(0, 3)], m[(1, 3)]],
        [d0, d1, m[(1, 3)], m[(1, 2)]],
        [d0, d1, m[(1, 2)], m[(0, 2)]],
    ]
    out = []
    for t in corner + octa:
        t = np.array(t)
        if np.linalg.det((t[1:] - t[0]).T) < 0.0:
            t[[2, 3]] = t[[3, 2]]
        out.append(t)
    return out
