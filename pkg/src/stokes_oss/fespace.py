"""Lagrange P1/P2 reference elements, triangle quadrature and dof maps."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import Mesh


class GeometryError(ValueError):
    """Degenerate or negatively oriented element."""


# --------------------------------------------------------------------------
# reference element

REFERENCE_NODES = {
    1: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    2: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                 [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
}


def _check_order(order):
    if order not in (1, 2):
        raise ValueError(f"element order must be 1 or 2, got {order!r}")


def reference_basis(order: int, points):
    """Basis values and reference gradients at reference coordinates.

    Parameters
    ----------
    order : 1 or 2
    points : (2,) or (Q, 2) array of (xi, eta) coordinates

    Returns
    -------
    values : (Q, n) array, or (n,) for a single point
    gradients : (Q, n, 2) array, or (n, 2) for a single point

    P2 nodes are ordered: three vertices, then midpoints of edges
    (0, 1), (1, 2), (2, 0).
    """
    _check_order(order)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if np.any(pts.min(axis=1) < -1e-12) or np.any(1.0 - pts.sum(axis=1) < -1e-12):
        raise ValueError("point outside the reference triangle")
    xi, eta = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - xi - eta, xi, eta
    # barycentric gradients w.r.t. (xi, eta)
    g0, g1, g2 = np.array([-1.0, -1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    if order == 1:
        values = np.stack([l0, l1, l2], axis=1)
        grads = np.broadcast_to(np.stack([g0, g1, g2]), (len(pts), 3, 2)).copy()
    else:
        lam = (l0, l1, l2)
        glam = (g0, g1, g2)
        vals, grs = [], []
        for i in range(3):
            vals.append(lam[i] * (2.0 * lam[i] - 1.0))
            grs.append(np.outer(4.0 * lam[i] - 1.0, glam[i]))
        for a, b in ((0, 1), (1, 2), (2, 0)):
            vals.append(4.0 * lam[a] * lam[b])
            grs.append(4.0 * (np.outer(lam[b], glam[a]) + np.outer(lam[a], glam[b])))
        values = np.stack(vals, axis=1)
        grads = np.stack(grs, axis=1)
    if single:
        return values[0], grads[0]
    return values, grads


# --------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (Q, 2) reference coordinates
    weights: np.ndarray  # (Q,), summing to 1/2
    degree: int

    def integrate(self, f) -> float:
        """Integrate ``f(xi, eta)`` over the reference triangle."""
        x = self.points
        return float(np.dot(self.weights, f(x[:, 0], x[:, 1])))


def _orbit3(a):
    # barycentric orbit (a, a, 1-2a) -> three (xi, eta) points
    b = 1.0 - 2.0 * a
    return [(a, a), (b, a), (a, b)]


@lru_cache(maxsize=None)
def _rule(degree):
    if degree == 1:
        pts, w = [(1 / 3, 1 / 3)], [1.0]
    elif degree == 2:
        pts, w = _orbit3(1 / 6), [1 / 3] * 3
    elif degree in (3, 4):
        # six-point Strang-Fix/Dunavant rule, positive weights, degree 4
        a, wa = 0.445948490915964886318329253883, 0.223381589678011465944827694
        b, wb = 0.091576213509770743459571463402, 0.109951743655321867388505639
        pts = _orbit3(a) + _orbit3(b)
        w = [wa] * 3 + [wb] * 3
        degree = 4
    elif degree == 5:
        # seven-point Radon rule
        s = np.sqrt(15.0)
        a, b = (6.0 - s) / 21.0, (6.0 + s) / 21.0
        pts = [(1 / 3, 1 / 3)] + _orbit3(a) + _orbit3(b)
        w = [9 / 40] + [(155.0 - s) / 1200.0] * 3 + [(155.0 + s) / 1200.0] * 3
    else:
        raise ValueError(f"quadrature degree must be in 1..5, got {degree!r}")
    points = np.array(pts, dtype=float)
    weights = 0.5 * np.array(w, dtype=float)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


def quadrature_rule(min_degree: int) -> QuadratureRule:
    """Symmetric rule with positive weights exact to ``min_degree`` (1..5)."""
    if isinstance(min_degree, bool) or min_degree not in (1, 2, 3, 4, 5):
        raise ValueError(f"quadrature degree must be in 1..5, got {min_degree!r}")
    return _rule(int(min_degree))


# --------------------------------------------------------------------------
# geometry

@dataclass(frozen=True)
class ElementMap:
    jacobian: np.ndarray
    inverse_transpose: np.ndarray
    det: float


def _jacobians(vertices, triangles):
    p = vertices[triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (T, 2, 2)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    return jac, det


def element_jacobian(mesh: Mesh, triangle_index: int) -> ElementMap:
    """Affine map from the reference triangle to triangle ``triangle_index``."""
    if not 0 <= triangle_index < mesh.n_triangles:
        raise IndexError(f"triangle index {triangle_index} out of range")
    return _element_map(mesh.vertices, mesh.triangles[triangle_index])


def _element_map(vertices, tri) -> ElementMap:
    jac, det = _jacobians(np.asarray(vertices, float), np.asarray(tri)[None, :])
    jac, det = jac[0], float(det[0])
    if not det > 0.0:
        raise GeometryError(f"degenerate or mirrored element (det={det:g})")
    inv_t = np.array([[jac[1, 1], -jac[1, 0]], [-jac[0, 1], jac[0, 0]]]) / det
    return ElementMap(jac, inv_t, det)


def element_geometry(mesh: Mesh):
    """Vectorized ``(jacobian, inverse_transpose, det)`` for all triangles."""
    jac, det = _jacobians(mesh.vertices, mesh.triangles)
    if np.any(det <= 0.0):
        raise GeometryError("mesh contains degenerate or mirrored elements")
    inv_t = np.empty_like(jac)
    inv_t[:, 0, 0] = jac[:, 1, 1]
    inv_t[:, 0, 1] = -jac[:, 1, 0]
    inv_t[:, 1, 0] = -jac[:, 0, 1]
    inv_t[:, 1, 1] = jac[:, 0, 0]
    inv_t /= det[:, None, None]
    return jac, inv_t, det


# --------------------------------------------------------------------------
# scalar Lagrange spaces and dof maps

@dataclass(frozen=True, eq=False)
class ScalarSpace:
    """Continuous scalar P1/P2 space: node coordinates and element-node table."""

    order: int
    nodes: np.ndarray        # (N, 2)
    cell_nodes: np.ndarray   # (T, 3 or 6)
    boundary_nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def scalar_space(mesh: Mesh, order: int) -> ScalarSpace:
    _check_order(order)
    tris = mesh.triangles
    bnd = mesh.boundary_vertices
    if order == 1:
        return ScalarSpace(1, mesh.vertices, tris, bnd)
    edges, tri_edges, counts = mesh.edges()
    nv = mesh.n_vertices
    nodes = np.vstack([mesh.vertices, mesh.vertices[edges].mean(axis=1)])
    cells = np.hstack([tris, nv + tri_edges])
    bnd = np.concatenate([bnd, nv + np.nonzero(counts == 1)[0]])
    return ScalarSpace(2, nodes, cells, np.sort(bnd))


VELOCITY, PRESSURE, STRESS = "velocity", "pressure", "stress"
TWO_FIELD_LAYOUT = {VELOCITY: (2, None), PRESSURE: (1, None)}
THREE_FIELD_LAYOUT = {VELOCITY: (2, None), PRESSURE: (1, None), STRESS: (3, None)}


@dataclass(frozen=True)
class FieldBlock:
    name: str
    components: int
    order: int
    offset: int
    n_nodes: int

    @property
    def size(self) -> int:
        return self.components * self.n_nodes

    def dofs(self, component: int) -> np.ndarray:
        start = self.offset + component * self.n_nodes
        return np.arange(start, start + self.n_nodes)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Component-blocked global numbering.

    Field ``f`` component ``c`` at scalar node ``i`` has global index
    ``f.offset + c * f.n_nodes + i``.
    """

    mesh: Mesh
    fields: dict
    spaces: dict
    total_dofs: int
    dirichlet_dofs: np.ndarray
    pinned_pressure_dof: int | None

    def field(self, name) -> FieldBlock:
        return self.fields[name]

    def space(self, name) -> ScalarSpace:
        return self.spaces[self.fields[name].order]

    def cell_dofs(self, name, component: int) -> np.ndarray:
        """(T, n_local) global indices of one field component."""
        f = self.fields[name]
        return f.offset + component * f.n_nodes + self.spaces[f.order].cell_nodes

    def split(self, vector) -> dict:
        """Split a global vector into ``{field: (components, n_nodes)}`` arrays."""
        x = np.asarray(vector)
        return {name: x[f.offset:f.offset + f.size].reshape(f.components, f.n_nodes)
                for name, f in self.fields.items()}


def build_dof_map(mesh: Mesh, layout: dict, order: int | None = None) -> DofMap:
    """Number the dofs of ``layout`` = ``{name: (components, order)}``.

    A ``None`` order in the layout takes the ``order`` argument. Velocity
    components on boundary nodes are Dirichlet; the pressure node with
    lowest (y, x) coordinates is pinned.
    """
    fields, spaces = {}, {}
    offset = 0
    for name, spec in layout.items():
        comps, ford = spec if isinstance(spec, tuple) else (spec["components"], spec.get("order"))
        ford = order if ford is None else ford
        _check_order(ford)
        if int(comps) != comps or comps < 1:
            raise ValueError(f"field {name!r} needs a positive component count")
        if ford not in spaces:
            spaces[ford] = scalar_space(mesh, ford)
        block = FieldBlock(name, int(comps), ford, offset, spaces[ford].n_nodes)
        fields[name] = block
        offset += block.size
    dirichlet = []
    if VELOCITY in fields:
        f = fields[VELOCITY]
        bnd = spaces[f.order].boundary_nodes
        for c in range(f.components):
            dirichlet.append(f.offset + c * f.n_nodes + bnd)
    dirichlet = np.sort(np.concatenate(dirichlet)) if dirichlet else np.zeros(0, np.int64)
    pinned = None
    if PRESSURE in fields:
        f = fields[PRESSURE]
        v = mesh.vertices
        pinned = f.offset + int(np.lexsort((v[:, 0], v[:, 1]))[0])
    dirichlet.setflags(write=False)
    return DofMap(mesh, fields, spaces, offset, dirichlet, pinned)
