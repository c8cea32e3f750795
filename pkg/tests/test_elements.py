import math

import numpy as np
import pytest

from shiftfem.elements import (
    AffineMap,
    barycentric,
    node_count,
    reference_nodes,
    refined_quadrature,
    shape_gradients,
    shape_values,
    tet_quadrature,
)


def exact_monomial(a, b, c):
    """Integral of x^a y^b z^c over the reference tet."""
    return (
        math.factorial(a) * math.factorial(b) * math.factorial(c)
        / math.factorial(a + b + c + 3)
    )


def random_ref_points(rng, n):
    pts = []
    while len(pts) < n:
        p = rng.random(3)
        if p.sum() <= 1.0:
            pts.append(p)
    return np.array(pts)


def test_node_counts_and_derived_counts():
    assert node_count(2) == 10
    assert node_count(3) == 20
    for k, n_k in ((2, 10), (3, 20)):
        assert len(reference_nodes(k)) == n_k
        m_k = k * (k + 2) * (k + 1) // 6
        p_k = n_k - (k + 1)
        assert (m_k, p_k) == {2: (4, 7), 3: (10, 16)}[k]
    with pytest.raises(ValueError):
        reference_nodes(4)


def test_delta_property_and_partition_of_unity():
    rng = np.random.default_rng(0)
    for k in (2, 3):
        nodes = reference_nodes(k)
        V = shape_values(k, nodes)
        assert np.max(np.abs(V - np.eye(len(nodes)))) <= 1e-12
        pts = random_ref_points(rng, 100)
        assert np.max(np.abs(shape_values(k, pts).sum(axis=1) - 1)) <= 1e-12


def test_gradients_vs_finite_differences():
    rng = np.random.default_rng(1)
    eps = 1e-6
    for k in (2, 3):
        pts = random_ref_points(rng, 100)
        grads = shape_gradients(k, pts)
        for d in range(3):
            step = np.zeros(3)
            step[d] = eps
            fd = (
                shape_values(k, pts + step) - shape_values(k, pts - step)
            ) / (2 * eps)
            assert np.max(np.abs(fd - grads[:, :, d])) <= 1e-6


def test_barycentric():
    lam = barycentric([[0.2, 0.3, 0.1]])
    np.testing.assert_allclose(lam, [[0.4, 0.2, 0.3, 0.1]])


def test_quadrature_trivia():
    quad = tet_quadrature(5)
    assert len(quad.weights) == 15
    assert np.all(quad.weights > 0)
    assert float(quad.weights.sum()) == pytest.approx(1 / 6, abs=1e-15)
    assert float(quad.weights @ quad.points[:, 0]) == pytest.approx(
        1 / 24, abs=1e-15
    )


def test_quadrature_monomial_exactness():
    quad = tet_quadrature(5)
    for a in range(6):
        for b in range(6 - a):
            for c in range(6 - a - b):
                num = float(
                    quad.weights
                    @ (
                        quad.points[:, 0] ** a
                        * quad.points[:, 1] ** b
                        * quad.points[:, 2] ** c
                    )
                )
                exact = exact_monomial(a, b, c)
                assert abs(num - exact) <= 1e-13 * max(1.0, exact)
    # the documented spot value
    assert float(
        quad.weights
        @ (quad.points[:, 0] ** 2 * quad.points[:, 1] * quad.points[:, 2] ** 2)
    ) == pytest.approx(4 / math.factorial(8), abs=1e-15)


def test_low_order_rule():
    quad = tet_quadrature(2)
    assert len(quad.weights) == 4
    for a in range(3):
        for b in range(3 - a):
            for c in range(3 - a - b):
                num = float(
                    quad.weights
                    @ (
                        quad.points[:, 0] ** a
                        * quad.points[:, 1] ** b
                        * quad.points[:, 2] ** c
                    )
                )
                assert abs(num - exact_monomial(a, b, c)) <= 1e-14
    with pytest.raises(ValueError):
        tet_quadrature(6)


def test_refined_quadrature_is_consistent():
    quad = refined_quadrature(5, 2)
    assert float(quad.weights.sum()) == pytest.approx(1 / 6, abs=1e-14)
    # still exact for degree-5 monomials
    num = float(
        quad.weights
        @ (quad.points[:, 0] ** 2 * quad.points[:, 1] ** 2 * quad.points[:, 2])
    )
    assert num == pytest.approx(exact_monomial(2, 2, 1), abs=1e-15)
    # and much more accurate than the base rule on a non-polynomial
    base = tet_quadrature(5)

    def integrate(q):
        return float(q.weights @ np.exp(3 * q.points.sum(axis=1)))

    # reference from an even finer rule
    ref = float(
        refined_quadrature(5, 4).weights
        @ np.exp(3 * refined_quadrature(5, 4).points.sum(axis=1))
    )
    assert abs(integrate(quad) - ref) < abs(integrate(base) - ref)


def test_affine_map_roundtrip_and_volume():
    rng = np.random.default_rng(2)
    for _ in range(10):
        verts = rng.standard_normal((4, 3))
        B = (verts[1:] - verts[0]).T
        if np.linalg.det(B) < 0:
            verts[[2, 3]] = verts[[3, 2]]
        amap = AffineMap.from_vertices(verts)
        pts = random_ref_points(rng, 100)
        back = amap.to_reference(amap.to_physical(pts))
        assert np.max(np.abs(back - pts)) <= 1e-12
        assert amap.volume == pytest.approx(abs(np.linalg.det(B)) / 6)


def test_affine_map_rejects_degenerate():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        AffineMap.from_vertices(verts)


def test_gradient_chain_rule_on_mapped_element():
    rng = np.random.default_rng(3)
    verts = np.array(
        [[0.1, 0.2, 0.0], [1.1, 0.3, 0.1], [0.2, 1.4, 0.2], [0.3, 0.1, 1.2]]
    )
    amap = AffineMap.from_vertices(verts)
    pts = random_ref_points(rng, 20)
    grads = shape_gradients(2, pts) @ amap.Binv  # physical gradients
    eps = 1e-6
    phys = amap.to_physical(pts)
    for d in range(3):
        step = np.zeros(3)
        step[d] = eps
        fd = (
            shape_values(2, amap.to_reference(phys + step))
            - shape_values(2, amap.to_reference(phys - step))
        ) / (2 * eps)
        assert np.max(np.abs(fd - grads[:, :, d])) <= 1e-6
