"""Stabilized velocity-pressure Stokes pencil.

Galerkin part ``mu (grad u, grad v) - (p, div v) + (q, div u)`` plus the
orthogonal-subscale terms on ``grad p`` (element weight ``c1 h_K^2 / mu``)
and on ``div u`` (weight ``c2 mu``).
"""
from __future__ import annotations

from dataclasses import dataclass

from .eigsolve import EigenSolution
from .fespace import PRESSURE, TWO_FIELD_LAYOUT, VELOCITY, build_dof_map
from .forms import add_form, divergence, field_value, scalar_gradient, vector_gradient
from .mesh import Mesh
from .oss import CONSISTENT, weighted_orthogonal_stab
from .sparse import Triplets
from .system import StokesSystem, build_integrator, finalize


@dataclass(frozen=True)
class TwoFieldParams:
    mu: float = 1.0
    c1: float = 0.25
    c2: float = 0.1

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("stabilization constants must be nonnegative")


def assemble_two_field(mesh: Mesh, order: int, params: TwoFieldParams = TwoFieldParams(),
                       projection: str = CONSISTENT) -> StokesSystem:
    if order not in (1, 2):
        raise ValueError(f"element order must be 1 or 2, got {order!r}")
    dm = build_dof_map(mesh, TWO_FIELD_LAYOUT, order)
    integ = build_integrator(dm)
    mu = params.mu
    grad_u = vector_gradient(integ, dm, VELOCITY)
    div_u = divergence(integ, dm, VELOCITY)
    p = field_value(integ, dm, PRESSURE)

    t = Triplets()
    add_form(t, integ, grad_u, grad_u, mu)
    add_form(t, integ, div_u, p, -1.0)
    add_form(t, integ, p, div_u, 1.0)

    h = mesh.element_diameters()
    stab = {
        "grad_p": weighted_orthogonal_stab(scalar_gradient(integ, dm, PRESSURE),
                                           params.c1 * h ** 2 / mu, integ, dm.total_dofs,
                                           projection=projection),
        "div_u": weighted_orthogonal_stab(div_u, params.c2 * mu, integ, dm.total_dofs,
                                          projection=projection),
    }
    return finalize(dm, integ, t, stab, params)


def solve_two_field_eigs(mesh: Mesh, order: int, params: TwoFieldParams = TwoFieldParams(),
                         k: int = 1, tol: float = 1e-8, **kwargs) -> EigenSolution:
    """Smallest ``k`` eigenpairs; vectors are full primal dof vectors."""
    return assemble_two_field(mesh, order, params, **kwargs).eigensolve(k, tol)


def solve_two_field_source(mesh: Mesh, order: int, params: TwoFieldParams = TwoFieldParams(),
                           f=None, **kwargs):
    """Velocity ``(2, N)`` and pressure ``(N,)`` nodal values for load ``f``."""
    system = assemble_two_field(mesh, order, params, **kwargs)
    fields = system.solve_source(f if f is not None else (lambda x, y: (0 * x, 0 * y)))
    return fields[VELOCITY], fields[PRESSURE][0]
