"""Global Lagrangian node numbering for continuous P2/P3 spaces.

Nodes are owned by mesh entities: one node per vertex, k-1 nodes per edge
(ordered from the smaller to the larger global vertex id), and for k=3 one
node per face.  This makes continuity automatic and lets boundary
classification decide per entity whether a node lies on Gamma_h.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import EDGES, FACES, node_count
from .meshgen import BoundaryClassification, Mesh


@dataclass
class LagrangeNodeSet:
    mesh: Mesh
    degree: int
    coords: np.ndarray  # (n_nodes, 3)
    n_nodes: int
    cell_nodes_table: np.ndarray  # (n_tets, n_k)
    #: parallel lists describing each node's owning entity
    entity_kind: list  # 'vertex' | 'edge' | 'face'
    entity_key: list  # vertex id | sorted vertex pair | sorted vertex triple

    def cell_nodes(self, t):
        return self.cell_nodes_table[t]

    def gamma_mask(self, cls: BoundaryClassification):
        """Boolean mask over global nodes: True when the node lies on Gamma_h."""
        mask = np.zeros(self.n_nodes, dtype=bool)
        for n in range(self.n_nodes):
            kind, key = self.entity_kind[n], self.entity_key[n]
            if kind == "vertex":
                mask[n] = key in cls.gamma_vertices
            elif kind == "edge":
                mask[n] = key in cls.gamma_edges
            else:
                mask[n] = key in cls.gamma_faces
        return mask


def build_lagrange_nodes(mesh: Mesh, degree: int) -> LagrangeNodeSet:
    if degree not in (2, 3):
        raise ValueError("only degrees 2 and 3 are supported")
    k = degree
    edges = mesh.edges()
    n_v = mesh.n_vertices
    per_edge = k - 1
    n_e = len(edges) * per_edge
    faces = mesh.faces() if k == 3 else {}
    n_f = len(faces)

    n_nodes = n_v + n_e + n_f
    coords = np.empty((n_nodes, 3))
    kinds: list = [None] * n_nodes
    keys: list = [None] * n_nodes

    coords[:n_v] = mesh.vertices
    for v in range(n_v):
        kinds[v], keys[v] = "vertex", v
    for (a, b), e in edges.items():
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        for m in range(per_edge):
            nid = n_v + e * per_edge + m
            frac = (m + 1) / k
            coords[nid] = (1.0 - frac) * pa + frac * pb
            kinds[nid], keys[nid] = "edge", (a, b)
    if k == 3:
        base = n_v + n_e
        for tri, f in faces.items():
            nid = base + f
            coords[nid] = mesh.vertices[list(tri)].mean(axis=0)
            kinds[nid], keys[nid] = "face", tri

    n_k = node_count(k)
    table = np.empty((mesh.n_tets, n_k), dtype=np.int64)
    for t, tet in enumerate(mesh.tets):
        loc = list(tet[:4])
        for a, b in EDGES:
            ga, gb = int(tet[a]), int(tet[b])
            e = edges[(min(ga, gb), max(ga, gb))]
            if k == 2:
                loc.append(n_v + e)
            else:
                first, second = n_v + 2 * e, n_v + 2 * e + 1
                # global edge nodes run from the smaller vertex id; flip
                # when the local edge runs the other way
                if ga < gb:
                    loc.extend([first, second])
                else:
                    loc.extend([second, first])
        if k == 3:
            for f in FACES:
                tri = tuple(sorted(int(tet[i]) for i in f))
                loc.append(n_v + n_e + faces[tri])
        table[t] = loc

    return LagrangeNodeSet(
        mesh=mesh,
        degree=degree,
        coords=coords,
        n_nodes=n_nodes,
        cell_nodes_table=table,
        entity_kind=kinds,
        entity_key=keys,
    )
