from functools import lru_cache

import numpy as np
import pytest
import sympy as sym

from stokes_oss.fespace import PRESSURE, STRESS, VELOCITY
from stokes_oss.forms import TENSOR_WEIGHTS, field_value, integrator, vector_gradient


def _manufactured(mu):
    x, y = sym.symbols("x y")
    psi = x**2 * (1 - x)**2 * y**2 * (1 - y)**2
    u = [sym.diff(psi, y), -sym.diff(psi, x)]
    p = x - sym.Rational(1, 2)
    lap = [sym.diff(c, x, 2) + sym.diff(c, y, 2) for c in u]
    f = [-mu * lap[0] + sym.diff(p, x), -mu * lap[1] + sym.diff(p, y)]
    grad_u = [sym.diff(u[0], x), sym.diff(u[0], y), sym.diff(u[1], x), sym.diff(u[1], y)]
    eps12 = (grad_u[1] + grad_u[2]) / 2
    sigma = [2 * mu * grad_u[0], 2 * mu * eps12, 2 * mu * grad_u[3]]

    def vec(exprs):
        fns = [sym.lambdify((x, y), e, "numpy") for e in exprs]
        return lambda X, Y: np.array([np.broadcast_to(fn(X, Y), np.shape(X)) for fn in fns])

    return {"u": vec(u), "grad_u": vec(grad_u), "p": vec([p]), "f": vec(f), "sigma": vec(sigma)}


@lru_cache(maxsize=None)
def manufactured_fields(mu=1):
    return _manufactured(mu)


@pytest.fixture(scope="session")
def manufactured():
    """Divergence-free velocity, linear pressure, matching load (mu = 1)."""
    return manufactured_fields(1)


def full_vector(dof_map, fields):
    out = np.zeros(dof_map.total_dofs)
    for name, f in dof_map.fields.items():
        out[f.offset:f.offset + f.size] = np.asarray(fields[name]).ravel()
    return out


def source_errors(system, fields, exact):
    """Velocity H1-seminorm, mean-free pressure L2 and stress L2 errors."""
    dm = system.dof_map
    integ = integrator(dm.mesh, dm.space(VELOCITY), degree=5)
    x = full_vector(dm, fields)
    X, Y = integ.points[..., 0], integ.points[..., 1]
    w = integ.wdet

    def l2(diff, weights=None):
        cw = np.ones(diff.shape[-1]) if weights is None else weights
        return float(np.sqrt(np.einsum("tq,tqc,c->", w, diff**2, cw)))

    gu = vector_gradient(integ, dm, VELOCITY).evaluate(x)
    e_u = l2(gu - np.moveaxis(exact["grad_u"](X, Y), 0, -1))
    ph = field_value(integ, dm, PRESSURE).evaluate(x)[..., 0]
    pe = exact["p"](X, Y)[0]
    area = w.sum()
    dp = (ph - (w * ph).sum() / area) - (pe - (w * pe).sum() / area)
    e_p = l2(dp[..., None])
    out = {"u_h1": e_u, "p_l2": e_p}
    if STRESS in dm.fields:
        sh = field_value(integ, dm, STRESS).evaluate(x)
        out["sigma_l2"] = l2(sh - np.moveaxis(exact["sigma"](X, Y), 0, -1), TENSOR_WEIGHTS)
    return out


def rates(sizes, errors):
    s, e = np.log(sizes), np.log(errors)
    return -(e[1:] - e[:-1]) / (s[1:] - s[:-1])


@lru_cache(maxsize=None)
def manufactured_errors(formulation, order, n):
    """Source-problem errors for the mu = 1 manufactured solution on the square."""
    from stokes_oss.mesh import unit_square_mesh
    from stokes_oss.three_field import assemble_three_field
    from stokes_oss.two_field import assemble_two_field

    assemble = assemble_two_field if formulation == "two_field" else assemble_three_field
    exact = manufactured_fields(1)
    system = assemble(unit_square_mesh(n), order)
    return source_errors(system, system.solve_source(exact["f"]), exact)
