"""Element-level differential operators and bilinear-form assembly.

A :class:`FieldOperator` tabulates a (possibly vector-valued) linear
quantity of the unknowns at every quadrature point of every element:
``op[t, q, c, a]`` is the contribution of local dof ``a`` (global index
``dofs[t, a]``) to component ``c`` of the quantity. Any bilinear form
``sum_K coef_K (L1 v, L2 u)_K`` is then one contraction of two operators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fespace import DofMap, ScalarSpace, element_geometry, quadrature_rule, reference_basis
from .mesh import Mesh
from .sparse import Triplets, assemble_csr

# engineering weights for symmetric tensors stored as (11, 12, 22)
TENSOR_WEIGHTS = np.array([1.0, 2.0, 1.0])


@dataclass(frozen=True, eq=False)
class Integrator:
    """Basis tables of one scalar space on a fixed quadrature rule."""

    space: ScalarSpace
    phi: np.ndarray    # (Q, n)
    dphi: np.ndarray   # (T, Q, n, 2) physical gradients
    wdet: np.ndarray   # (T, Q) quadrature weight times |det J|
    points: np.ndarray  # (T, Q, 2) physical quadrature points


def integrator(mesh: Mesh, space: ScalarSpace, degree: int | None = None) -> Integrator:
    quad = quadrature_rule(degree if degree is not None else 2 * space.order)
    phi, ref_grad = reference_basis(space.order, quad.points)
    jac, inv_t, det = element_geometry(mesh)
    dphi = np.einsum("tij,qaj->tqai", inv_t, ref_grad)
    wdet = quad.weights[None, :] * det[:, None]
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    points = p0[:, None, :] + np.einsum("tij,qj->tqi", jac, quad.points)
    return Integrator(space, phi, dphi, wdet, points)


@dataclass(frozen=True, eq=False)
class FieldOperator:
    op: np.ndarray     # (T, Q, C, n)
    dofs: np.ndarray   # (T, n)

    @property
    def components(self) -> int:
        return self.op.shape[2]

    def __neg__(self):
        return FieldOperator(-self.op, self.dofs)

    def __sub__(self, other):
        return concat(self, -other)

    def __add__(self, other):
        return concat(self, other)

    def evaluate(self, x) -> np.ndarray:
        """(T, Q, C) values of the quantity for global vector ``x``."""
        return np.einsum("tqca,ta->tqc", self.op, np.asarray(x)[self.dofs])


def concat(*ops: FieldOperator) -> FieldOperator:
    """Sum of quantities acting on disjoint dof sets."""
    return FieldOperator(np.concatenate([o.op for o in ops], axis=3),
                         np.concatenate([o.dofs for o in ops], axis=1))


def _component_dofs(dm: DofMap, name: str):
    f = dm.field(name)
    return [dm.cell_dofs(name, c) for c in range(f.components)]


def value_op(integ: Integrator, cell_dofs_per_comp) -> FieldOperator:
    """Pointwise values of a field given per-component (T, n) dof tables."""
    ncomp = len(cell_dofs_per_comp)
    T, Q = integ.wdet.shape
    n = integ.phi.shape[1]
    op = np.zeros((T, Q, ncomp, ncomp * n))
    for c in range(ncomp):
        op[:, :, c, c * n:(c + 1) * n] = integ.phi[None]
    return FieldOperator(op, np.concatenate(cell_dofs_per_comp, axis=1))


def field_value(integ, dm, name) -> FieldOperator:
    return value_op(integ, _component_dofs(dm, name))


def scalar_gradient(integ, dm, name) -> FieldOperator:
    (dofs,) = _component_dofs(dm, name)
    op = np.transpose(integ.dphi, (0, 1, 3, 2))  # (T, Q, 2, n)
    return FieldOperator(op, dofs)


def vector_gradient(integ, dm, name) -> FieldOperator:
    """Components (d_x u1, d_y u1, d_x u2, d_y u2)."""
    dx, dy = _component_dofs(dm, name)
    T, Q, n, _ = integ.dphi.shape
    op = np.zeros((T, Q, 4, 2 * n))
    op[:, :, 0, :n] = integ.dphi[..., 0]
    op[:, :, 1, :n] = integ.dphi[..., 1]
    op[:, :, 2, n:] = integ.dphi[..., 0]
    op[:, :, 3, n:] = integ.dphi[..., 1]
    return FieldOperator(op, np.concatenate([dx, dy], axis=1))


def divergence(integ, dm, name) -> FieldOperator:
    d1, d2 = _component_dofs(dm, name)
    T, Q, n, _ = integ.dphi.shape
    op = np.zeros((T, Q, 1, 2 * n))
    op[:, :, 0, :n] = integ.dphi[..., 0]
    op[:, :, 0, n:] = integ.dphi[..., 1]
    return FieldOperator(op, np.concatenate([d1, d2], axis=1))


def sym_gradient(integ, dm, name) -> FieldOperator:
    """Symmetric gradient as (e11, e12, e22); pair with ``TENSOR_WEIGHTS``."""
    d1, d2 = _component_dofs(dm, name)
    T, Q, n, _ = integ.dphi.shape
    op = np.zeros((T, Q, 3, 2 * n))
    op[:, :, 0, :n] = integ.dphi[..., 0]
    op[:, :, 1, :n] = 0.5 * integ.dphi[..., 1]
    op[:, :, 1, n:] = 0.5 * integ.dphi[..., 0]
    op[:, :, 2, n:] = integ.dphi[..., 1]
    return FieldOperator(op, np.concatenate([d1, d2], axis=1))


def tensor_divergence(integ, dm, name) -> FieldOperator:
    """Row-wise divergence of a symmetric tensor stored as (s11, s12, s22)."""
    s11, s12, s22 = _component_dofs(dm, name)
    T, Q, n, _ = integ.dphi.shape
    op = np.zeros((T, Q, 2, 3 * n))
    op[:, :, 0, :n] = integ.dphi[..., 0]
    op[:, :, 0, n:2 * n] = integ.dphi[..., 1]
    op[:, :, 1, n:2 * n] = integ.dphi[..., 0]
    op[:, :, 1, 2 * n:] = integ.dphi[..., 1]
    return FieldOperator(op, np.concatenate([s11, s12, s22], axis=1))


def local_form(integ: Integrator, test: FieldOperator, trial: FieldOperator,
               coef=1.0, comp_weights=None) -> np.ndarray:
    """(T, a, b) element matrices of ``sum_K coef_K (test, trial)_K``."""
    ncomp = test.components
    if trial.components != ncomp:
        raise ValueError("test and trial quantities have different component counts")
    cw = np.ones(ncomp) if comp_weights is None else np.asarray(comp_weights, float)
    w = integ.wdet * np.broadcast_to(np.asarray(coef, float), integ.wdet.shape[:1])[:, None]
    return np.einsum("tq,c,tqca,tqcb->tab", w, cw, test.op, trial.op, optimize=True)


def add_form(triplets: Triplets, integ, test, trial, coef=1.0, comp_weights=None,
             row_offset=0, col_offset=0):
    local = local_form(integ, test, trial, coef, comp_weights)
    triplets.add_local(test.dofs + row_offset, trial.dofs + col_offset, local)


def form_matrix(shape, integ, test, trial, coef=1.0, comp_weights=None):
    t = Triplets()
    add_form(t, integ, test, trial, coef, comp_weights)
    return assemble_csr(shape[0], shape[1], t)


def load_vector(integ: Integrator, test: FieldOperator, f, size: int) -> np.ndarray:
    """Assemble ``(f, test)`` for ``f(x, y) -> (C,) + x.shape`` components."""
    pts = integ.points
    fv = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    fv = np.broadcast_to(fv, (test.components,) + pts.shape[:2])
    local = np.einsum("tq,ctq,tqca->ta", integ.wdet, fv, test.op, optimize=True)
    out = np.zeros(size)
    np.add.at(out, test.dofs, local)
    return out
