"""Orthogonal-subscale stabilization terms ``sum_K a_K (P'g, P'g')_K``.

``g`` is a derived quantity of the unknowns (a gradient, a divergence, ...)
and ``P' = I - P`` with ``P`` the L2 projection onto a continuous Lagrange
space. With ``G`` the weighted Gram matrix of ``g``, ``C`` the cross mass
between the projection basis and ``g``, ``M`` the projection-space mass and
the subscript ``a`` marking element-weighted versions, the term is

    S = G_a - C_a^T P - P^T C_a + P^T M_a P,     P = M^{-1} C.

With the consistent mass ``M`` the inverse is dense, so ``S`` is never
formed. Instead the projection is carried by auxiliary unknowns and ``S``
is the Schur complement of the symmetric block matrix

    [[G_a, C_a^T, C^T],
     [C_a, M_a,   M  ],
     [C,   M,     0  ]]

which for uniform weights ``a`` collapses to ``a * [[G, C^T], [C, M]]``.
The auxiliary rows carry no mass, so the pencil stays linear and its
finite spectrum is unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import FieldOperator, Integrator, local_form, value_op
from .sparse import Triplets, assemble_csr

CONSISTENT, LUMPED = "consistent", "lumped"


@dataclass(frozen=True, eq=False)
class OrthogonalStabilization:
    gram: sp.csr_matrix      # (n, n)  sum_K a_K (g, g')_K
    cross: sp.csr_matrix     # (m, n)  (phi_i, g)
    cross_w: sp.csr_matrix   # (m, n)  sum_K a_K (phi_i, g)_K
    mass: sp.csr_matrix      # (m, m)
    mass_w: sp.csr_matrix    # (m, m)
    alpha: float | None      # common weight when uniform
    projection_kind: str = CONSISTENT

    @property
    def n(self) -> int:
        return self.gram.shape[0]

    @property
    def n_proj(self) -> int:
        return self.mass.shape[0]

    @property
    def is_zero(self) -> bool:
        return self.alpha == 0.0

    def _mass_for_projection(self):
        if self.projection_kind == LUMPED:
            return sp.diags(np.asarray(self.mass.sum(axis=1)).ravel())
        return self.mass

    def project(self, x) -> np.ndarray:
        """Coefficients of the projection of ``g(x)`` onto the target space."""
        m = self._mass_for_projection()
        rhs = self.cross @ np.asarray(x, float)
        if self.projection_kind == LUMPED:
            return rhs / m.diagonal()
        return spla.spsolve(sp.csc_matrix(m), rhs)

    def projection_matrix(self) -> np.ndarray:
        """Dense ``P`` (tests and small problems only)."""
        m = self._mass_for_projection().toarray()
        return np.linalg.solve(m, self.cross.toarray())

    def matrix(self):
        """``S`` as a dense array (consistent) or sparse matrix (lumped)."""
        if self.projection_kind == LUMPED:
            p = sp.diags(1.0 / self._mass_for_projection().diagonal()) @ self.cross
            s = self.gram - self.cross_w.T @ p - p.T @ self.cross_w + p.T @ self.mass_w @ p
            return sp.csr_matrix(s)
        p = self.projection_matrix()
        cw = self.cross_w.toarray()
        return (self.gram.toarray() - cw.T @ p - p.T @ cw
                + p.T @ (self.mass_w.toarray() @ p))

    def quadratic_form(self, x) -> float:
        """``x^T S x`` without forming ``S``."""
        x = np.asarray(x, float)
        if self.projection_kind == LUMPED:
            return float(x @ (self.matrix() @ x))
        px = self.project(x)
        return float(x @ (self.gram @ x) - 2.0 * px @ (self.cross_w @ x)
                     + px @ (self.mass_w @ px))

    @property
    def n_aux(self) -> int:
        """Auxiliary unknowns this term adds to the global system."""
        if self.is_zero or self.projection_kind == LUMPED:
            return 0
        return self.n_proj if self.alpha is not None else 2 * self.n_proj

    def add_to(self, triplets: Triplets, aux_offset: int) -> None:
        """Add the term to a global matrix; auxiliaries start at ``aux_offset``."""
        if self.is_zero:
            return
        if self.projection_kind == LUMPED:
            s = sp.coo_matrix(self.matrix())
            triplets.add(s.row, s.col, s.data)
            return
        if self.alpha is not None:
            a = self.alpha
            blocks = [(0, 0, self.gram), (aux_offset, 0, a * self.cross),
                      (0, aux_offset, a * self.cross.T),
                      (aux_offset, aux_offset, a * self.mass)]
        else:
            m = self.n_proj
            x1, x2 = aux_offset, aux_offset + m
            blocks = [(0, 0, self.gram),
                      (x1, 0, self.cross_w), (0, x1, self.cross_w.T),
                      (x2, 0, self.cross), (0, x2, self.cross.T),
                      (x1, x1, self.mass_w), (x1, x2, self.mass), (x2, x1, self.mass)]
        for r0, c0, block in blocks:
            b = sp.coo_matrix(block)
            triplets.add(b.row + r0, b.col + c0, b.data)


def weighted_orthogonal_stab(derived: FieldOperator, weights, integ: Integrator,
                             n_dofs: int, comp_weights=None,
                             projection: str = CONSISTENT) -> OrthogonalStabilization:
    """Build the stabilization of quantity ``derived`` with element weights.

    Parameters
    ----------
    derived : operator tabulating ``g`` on the global unknowns
    weights : scalar or (T,) nonnegative element weights ``a_K``
    integ : integrator of the continuous projection space (same elements
        and quadrature as ``derived``); the target space has one scalar
        copy per component of ``g``
    n_dofs : size of the global unknown vector ``derived`` acts on
    comp_weights : inner-product weights of the components of ``g``
    projection : ``"consistent"`` L2 projection or ``"lumped"`` row-sum mass
        (P1 target spaces only)
    """
    if projection not in (CONSISTENT, LUMPED):
        raise ValueError(f"unknown projection kind {projection!r}")
    if projection == LUMPED and integ.space.order != 1:
        raise ValueError("row-sum lumping is only defined for P1 projection spaces")
    T = integ.wdet.shape[0]
    if derived.op.shape[:2] != integ.wdet.shape:
        raise ValueError("derived operator and integrator disagree on elements/quadrature")
    w = np.broadcast_to(np.asarray(weights, dtype=float), (T,)).copy()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("stabilization weights must be finite and nonnegative")
    ncomp = derived.components
    cw = np.ones(ncomp) if comp_weights is None else np.asarray(comp_weights, float)
    nn = integ.space.n_nodes
    proj = value_op(integ, [c * nn + integ.space.cell_nodes for c in range(ncomp)])
    m = ncomp * nn

    def build(shape, test, trial, coef):
        t = Triplets()
        t.add_local(test.dofs, trial.dofs, local_form(integ, test, trial, coef, cw))
        return assemble_csr(shape[0], shape[1], t)

    # structured meshes give h_K equal up to rounding
    uniform = float(w.mean()) if T and np.ptp(w) <= 1e-12 * w.max() else None
    if uniform is not None:
        w[:] = uniform
    gram = build((n_dofs, n_dofs), derived, derived, w)
    cross = build((m, n_dofs), proj, derived, 1.0)
    mass = build((m, m), proj, proj, 1.0)
    if uniform is not None:
        cross_w, mass_w = uniform * cross, uniform * mass
    else:
        cross_w = build((m, n_dofs), proj, derived, w)
        mass_w = build((m, m), proj, proj, w)
    return OrthogonalStabilization(gram, cross, cross_w, mass, mass_w, uniform, projection)
