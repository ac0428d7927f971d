"""Constrained Stokes pencils shared by the two- and three-field assemblies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .eigsolve import EigenPair, EigenSolution, shift_invert_arnoldi
from .fespace import VELOCITY, DofMap
from .forms import Integrator, add_form, field_value, integrator, load_vector
from .sparse import Triplets, assemble_csr, lu_factor


class AssemblyError(RuntimeError):
    """The assembled system is singular; indicates an assembly bug."""


@dataclass(frozen=True, eq=False)
class StokesSystem:
    """Pencil ``(A, M)`` on the free unknowns.

    The extended unknown vector is the primal dof vector of ``dof_map``
    followed by ``n_aux`` projection unknowns. Velocity Dirichlet dofs and
    the pinned pressure dof are removed; ``free`` lists the retained
    extended indices in order.
    """

    A: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: DofMap
    n_aux: int
    free: np.ndarray
    galerkin: sp.csr_matrix         # unconstrained primal Galerkin matrix
    stabilization: dict = field(default_factory=dict)
    integ: Integrator | None = None
    params: object = None

    @property
    def n_primal_free(self) -> int:
        return int(np.count_nonzero(self.free < self.dof_map.total_dofs))

    def expand(self, x_free) -> np.ndarray:
        """Primal dof vector with zeros at constrained dofs."""
        full = np.zeros(self.dof_map.total_dofs + self.n_aux, dtype=np.asarray(x_free).dtype)
        full[self.free] = x_free
        return full[:self.dof_map.total_dofs]

    def restrict(self, x_primal) -> np.ndarray:
        full = np.zeros(self.dof_map.total_dofs + self.n_aux)
        full[:self.dof_map.total_dofs] = x_primal
        return full[self.free]

    def primal_mask(self) -> np.ndarray:
        """Boolean mask over free unknowns that are primal (not projections)."""
        return self.free < self.dof_map.total_dofs

    def load(self, f) -> np.ndarray:
        """Free-dof right-hand side of ``(f, v)`` for ``f(x, y) -> (fx, fy)``."""
        dm = self.dof_map
        b = load_vector(self.integ, field_value(self.integ, dm, VELOCITY), f, dm.total_dofs)
        return self.restrict(b)

    def eigensolve(self, k: int = 1, tol: float = 1e-8, sigma: float = 0.0) -> EigenSolution:
        """Eigenpairs nearest ``sigma`` with vectors expanded to primal dofs."""
        sol = shift_invert_arnoldi(self.A, self.M, sigma, k, tol)
        pairs = [EigenPair(p.lam, self.expand(p.vector), p.residual) for p in sol.pairs]
        stats = dict(sol.stats, n_free=self.A.shape[0], n_aux=self.n_aux)
        return EigenSolution(pairs, sol.sigma, stats, self.dof_map)

    def solve_source(self, f) -> dict:
        """Solve ``A x = (f, v)`` and split the primal solution by field."""
        try:
            lu = lu_factor(self.A)
        except ArithmeticError as exc:
            raise AssemblyError(f"source system is singular: {exc}") from None
        x = lu.solve(self.load(f))
        return self.dof_map.split(self.expand(x))


def velocity_mass(integ: Integrator, dm: DofMap, size: int) -> sp.csr_matrix:
    t = Triplets()
    u = field_value(integ, dm, VELOCITY)
    add_form(t, integ, u, u)
    return assemble_csr(size, size, t)


def finalize(dm: DofMap, integ: Integrator, galerkin_triplets: Triplets,
             stabilization: dict, params=None) -> StokesSystem:
    """Add stabilization terms, apply constraints and build the pencil."""
    n = dm.total_dofs
    galerkin = assemble_csr(n, n, galerkin_triplets)
    full = Triplets()
    g = sp.coo_matrix(galerkin)
    full.add(g.row, g.col, g.data)
    offset = n
    for term in stabilization.values():
        term.add_to(full, offset)
        offset += term.n_aux
    n_ext = offset
    A = assemble_csr(n_ext, n_ext, full)
    M = velocity_mass(integ, dm, n_ext)
    constrained = np.asarray(dm.dirichlet_dofs)
    if dm.pinned_pressure_dof is not None:
        constrained = np.append(constrained, dm.pinned_pressure_dof)
    free = np.setdiff1d(np.arange(n_ext), constrained)
    A = A[free][:, free].tocsr()
    M = M[free][:, free].tocsr()
    A.sort_indices()
    M.sort_indices()
    return StokesSystem(A, M, dm, n_ext - n, free, galerkin, stabilization, integ, params)


def element_sizes(dm: DofMap) -> np.ndarray:
    return dm.mesh.element_diameters()


def build_integrator(dm: DofMap) -> Integrator:
    order = dm.field(VELOCITY).order
    if any(f.order != order for f in dm.fields.values()):
        raise ValueError("equal-order interpolation required")
    return integrator(dm.mesh, dm.space(VELOCITY))

