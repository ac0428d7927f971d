from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stokes_oss.fespace import (PRESSURE, STRESS, THREE_FIELD_LAYOUT, TWO_FIELD_LAYOUT, VELOCITY,
                                GeometryError, build_dof_map, element_jacobian, quadrature_rule,
                                reference_basis, scalar_space)
from stokes_oss.mesh import DomainTag, Mesh, l_shaped_mesh, unit_square_mesh

P2_NODES = np.array([[0, 0], [1, 0], [0, 1], [0.5, 0], [0.5, 0.5], [0, 0.5]])


@pytest.mark.parametrize("order,nodes", [(1, P2_NODES[:3]), (2, P2_NODES)])
def test_kronecker(order, nodes):
    values, _ = reference_basis(order, nodes)
    assert np.allclose(values, np.eye(len(nodes)), atol=1e-15)


def test_single_point_examples():
    v, _ = reference_basis(1, [0.0, 0.0])
    assert v.tolist() == [1.0, 0.0, 0.0]
    v, _ = reference_basis(2, [0.5, 0.0])
    assert np.allclose(v, [0, 0, 0, 1, 0, 0])


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([1, 2]))
def test_partition_of_unity(a, b, order):
    xi, eta = a * (1 - b), b
    v, g = reference_basis(order, [xi, eta])
    assert v.sum() == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(g.sum(axis=0), 0.0, atol=1e-12)


def test_gradients_match_finite_differences():
    pts = np.array([[0.2, 0.3], [0.1, 0.1], [0.6, 0.2]])
    h = 1e-6
    for order in (1, 2):
        _, g = reference_basis(order, pts)
        vx = (reference_basis(order, pts + [h, 0])[0] - reference_basis(order, pts - [h, 0])[0]) / (2 * h)
        vy = (reference_basis(order, pts + [0, h])[0] - reference_basis(order, pts - [0, h])[0]) / (2 * h)
        assert np.allclose(g[..., 0], vx, atol=1e-8)
        assert np.allclose(g[..., 1], vy, atol=1e-8)


def test_basis_errors():
    with pytest.raises(ValueError):
        reference_basis(3, [0.1, 0.1])
    with pytest.raises(ValueError):
        reference_basis(1, [0.8, 0.8])


def monomial_integral(a, b):
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5])
def test_quadrature_exactness(degree):
    rule = quadrature_rule(degree)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = rule.integrate(lambda x, y: x**a * y**b)
            assert abs(got - monomial_integral(a, b)) <= 1e-14


def test_quadrature_examples():
    r = quadrature_rule(1)
    assert len(r.weights) == 1 and r.weights[0] == 0.5
    assert quadrature_rule(2).integrate(lambda x, y: np.ones_like(x)) == pytest.approx(0.5)
    assert quadrature_rule(4).integrate(lambda x, y: x**2 * y**2) == pytest.approx(1 / 180, abs=1e-15)
    for bad in (0, 6, 2.5):
        with pytest.raises(ValueError):
            quadrature_rule(bad)


def test_jacobian_examples():
    ref = Mesh(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]), np.array([0, 1, 2]),
               DomainTag.SQUARE)
    assert element_jacobian(ref, 0).det == pytest.approx(1.0)
    m = unit_square_mesh(2)
    for t in range(m.n_triangles):
        assert element_jacobian(m, t).det == pytest.approx(0.25)


def test_mirrored_element_rejected():
    from stokes_oss.fespace import _element_map
    with pytest.raises(GeometryError):
        _element_map(np.array([[0.0, 0], [0, 1], [1, 0]]), np.array([0, 1, 2]))


def test_gradient_of_linear_function():
    m = l_shaped_mesh(3)
    for t in range(m.n_triangles):
        e = element_jacobian(m, t)
        xs = m.vertices[m.triangles[t], 0]
        _, g = reference_basis(1, [1 / 3, 1 / 3])
        grad = e.inverse_transpose @ (g.T @ xs)
        assert np.allclose(grad, [1.0, 0.0], atol=1e-12)


def test_scalar_dof_counts():
    m = unit_square_mesh(4)
    assert scalar_space(m, 1).n_nodes == 25
    assert scalar_space(m, 2).n_nodes == 81
    dm = build_dof_map(m, TWO_FIELD_LAYOUT, 1)
    assert dm.total_dofs == 75
    dm3 = build_dof_map(m, THREE_FIELD_LAYOUT, 2)
    assert dm3.total_dofs == 6 * 81


@pytest.mark.parametrize("order", [1, 2])
def test_dof_map_invariants(order):
    m = l_shaped_mesh(3)
    dm = build_dof_map(m, THREE_FIELD_LAYOUT, order)
    seen = np.concatenate([dm.cell_dofs(n, c).ravel() for n, f in dm.fields.items()
                           for c in range(f.components)])
    assert np.array_equal(np.unique(seen), np.arange(dm.total_dofs))
    vel = set(np.arange(dm.field(VELOCITY).offset, dm.field(VELOCITY).offset + dm.field(VELOCITY).size))
    assert set(dm.dirichlet_dofs.tolist()) <= vel
    space = dm.space(VELOCITY)
    assert len(dm.dirichlet_dofs) == 2 * len(space.boundary_nodes)
    p = dm.field(PRESSURE)
    assert p.offset <= dm.pinned_pressure_dof < p.offset + p.size
    assert dm.field(STRESS).components == 3


@pytest.mark.parametrize("order", [1, 2])
def test_shared_edges_share_dofs(order):
    m = unit_square_mesh(3)
    space = scalar_space(m, order)
    edges, tri_edges, counts = m.edges()
    local = {1: [(0, 1), (1, 2), (2, 0)], 2: [(0, 3, 1), (1, 4, 2), (2, 5, 0)]}[order]
    seen = {}
    for t in range(m.n_triangles):
        for k in range(3):
            e = int(tri_edges[t, k])
            nodes = space.cell_nodes[t, list(local[k])]
            key = frozenset(nodes.tolist())
            if e in seen:
                assert seen[e] == key
            seen[e] = key


def test_p2_midpoint_coordinates():
    m = unit_square_mesh(2)
    s = scalar_space(m, 2)
    for t in range(m.n_triangles):
        v = s.nodes[s.cell_nodes[t]]
        assert np.allclose(v[3], (v[0] + v[1]) / 2)
        assert np.allclose(v[4], (v[1] + v[2]) / 2)
        assert np.allclose(v[5], (v[2] + v[0]) / 2)


def test_pinned_pressure_is_lowest_vertex():
    m = l_shaped_mesh(2)
    dm = build_dof_map(m, TWO_FIELD_LAYOUT, 1)
    node = dm.pinned_pressure_dof - dm.field(PRESSURE).offset
    v = m.vertices
    assert v[node, 1] == v[:, 1].min()
    assert v[node, 0] == v[v[:, 1] == v[:, 1].min(), 0].min()
