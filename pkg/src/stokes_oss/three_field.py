"""Stabilized stress-velocity-pressure Stokes pencil.

Galerkin part::

    (sym_grad v, s) - (p, div v) + (q, div u) + (s, t) / (2 mu) - (sym_grad u, t)

with the symmetric stress ``s`` stored as (s11, s12, s22) and paired in the
engineering inner product ``s11 t11 + 2 s12 t12 + s22 t22``. Orthogonal
subscale terms act on ``sym_grad u`` (weight ``2 mu c3``), ``div u``
(``2 mu c4``) and on the combined residual ``grad p - div s`` (element
weight ``c5 h_K^2 / mu``), the latter through one shared projection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigsolve import EigenSolution
from .fespace import PRESSURE, STRESS, THREE_FIELD_LAYOUT, VELOCITY, build_dof_map
from .forms import (TENSOR_WEIGHTS, add_form, divergence, field_value, scalar_gradient,
                    sym_gradient, tensor_divergence)
from .mesh import Mesh
from .oss import CONSISTENT, weighted_orthogonal_stab
from .sparse import Triplets
from .system import StokesSystem, build_integrator, finalize


@dataclass(frozen=True)
class ThreeFieldParams:
    mu: float = 1.0
    c3: float = 1.0
    c4: float = 0.1
    c5: float = 0.25

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if min(self.c3, self.c4, self.c5) < 0:
            raise ValueError("stabilization constants must be nonnegative")


def assemble_three_field(mesh: Mesh, order: int,
                         params: ThreeFieldParams = ThreeFieldParams(),
                         projection: str = CONSISTENT) -> StokesSystem:
    if order not in (1, 2):
        raise ValueError(f"element order must be 1 or 2, got {order!r}")
    dm = build_dof_map(mesh, THREE_FIELD_LAYOUT, order)
    integ = build_integrator(dm)
    mu = params.mu
    eps_u = sym_gradient(integ, dm, VELOCITY)
    div_u = divergence(integ, dm, VELOCITY)
    p = field_value(integ, dm, PRESSURE)
    s = field_value(integ, dm, STRESS)

    t = Triplets()
    add_form(t, integ, eps_u, s, 1.0, TENSOR_WEIGHTS)
    add_form(t, integ, div_u, p, -1.0)
    add_form(t, integ, p, div_u, 1.0)
    add_form(t, integ, s, s, 1.0 / (2.0 * mu), TENSOR_WEIGHTS)
    add_form(t, integ, s, eps_u, -1.0, TENSOR_WEIGHTS)

    h = mesh.element_diameters()
    residual = scalar_gradient(integ, dm, PRESSURE) - tensor_divergence(integ, dm, STRESS)
    n = dm.total_dofs
    stab = {
        "sym_grad_u": weighted_orthogonal_stab(eps_u, 2.0 * mu * params.c3, integ, n,
                                               TENSOR_WEIGHTS, projection),
        "div_u": weighted_orthogonal_stab(div_u, 2.0 * mu * params.c4, integ, n,
                                          projection=projection),
        "grad_p_div_s": weighted_orthogonal_stab(residual, params.c5 * h ** 2 / mu, integ, n,
                                                 projection=projection),
    }
    return finalize(dm, integ, t, stab, params)


def solve_three_field_eigs(mesh: Mesh, order: int,
                           params: ThreeFieldParams = ThreeFieldParams(), k: int = 1,
                           tol: float = 1e-8, **kwargs) -> EigenSolution:
    """Smallest ``k`` eigenpairs; vectors are full primal dof vectors."""
    return assemble_three_field(mesh, order, params, **kwargs).eigensolve(k, tol)


def solve_three_field_source(mesh: Mesh, order: int,
                             params: ThreeFieldParams = ThreeFieldParams(), f=None, **kwargs):
    """Velocity ``(2, N)``, pressure ``(N,)`` and stress ``(3, N)`` nodal values."""
    system = assemble_three_field(mesh, order, params, **kwargs)
    fields = system.solve_source(f if f is not None else (lambda x, y: (0 * x, 0 * y)))
    return fields[VELOCITY], fields[PRESSURE][0], fields[STRESS]


def stress_projection_defect(system: StokesSystem, vector) -> float:
    """``||s_h - Pi(2 mu sym_grad u_h)|| / ||s_h||`` in the engineering L2 norm."""
    dm = system.dof_map
    integ = system.integ
    term = system.stabilization["sym_grad_u"]
    mu = system.params.mu
    x = np.asarray(vector, float)
    proj = 2.0 * mu * term.project(x)           # (3 N,) coefficients
    s = dm.split(x)[STRESS].ravel()
    diff = s - proj
    mass = term.mass                           # engineering-weighted mass
    return float(np.sqrt(diff @ (mass @ diff) / (s @ (mass @ s))))

