import numpy as np
import pytest
import scipy.sparse as sp

from conftest import _manufactured, manufactured_errors, rates, source_errors
from stokes_oss.fespace import PRESSURE, VELOCITY
from stokes_oss.mesh import l_shaped_mesh, unit_square_mesh
from stokes_oss.oss import LUMPED
from stokes_oss.two_field import (TwoFieldParams, assemble_two_field, solve_two_field_eigs,
                                  solve_two_field_source)


def test_params_validation():
    with pytest.raises(ValueError):
        TwoFieldParams(mu=0.0)
    with pytest.raises(ValueError):
        TwoFieldParams(c1=-1.0)
    assert (TwoFieldParams().c1, TwoFieldParams().c2) == (0.25, 0.1)


def test_invalid_order():
    with pytest.raises(ValueError):
        assemble_two_field(unit_square_mesh(2), 3)


def test_constrained_size():
    assert assemble_two_field(unit_square_mesh(2), 1).n_primal_free == 10


def test_zero_constants_give_galerkin_matrix():
    s = assemble_two_field(unit_square_mesh(3), 2, TwoFieldParams(c1=0.0, c2=0.0))
    assert s.n_aux == 0
    g = s.galerkin[s.free][:, s.free]
    assert abs(s.A - g).max() <= 1e-14


@pytest.mark.parametrize("order", [1, 2])
def test_structure(order):
    s = assemble_two_field(l_shaped_mesh(2), order)
    dm = s.dof_map
    M = s.M.toarray()
    assert np.allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() >= -1e-14
    vel = s.free[s.free < dm.field(PRESSURE).offset]
    nv = len(vel)
    assert np.linalg.eigvalsh(M[:nv, :nv]).min() > 0
    assert np.abs(M[nv:, :]).max() == 0.0
    Avv = s.A[:nv, :nv].toarray()
    assert np.allclose(Avv, Avv.T, atol=1e-12)
    assert np.linalg.eigvalsh(Avv).min() > 0


def test_stabilization_psd_random_vectors():
    s = assemble_two_field(unit_square_mesh(4), 1)
    rng = np.random.default_rng(0)
    for term in s.stabilization.values():
        for _ in range(100):
            z = rng.standard_normal(term.n)
            assert term.quadratic_form(z) >= -1e-12 * (z @ z)


@pytest.mark.parametrize("order", [1, 2])
def test_mu_scaling(order):
    mesh = unit_square_mesh(4)
    a = solve_two_field_eigs(mesh, order, TwoFieldParams(mu=1.0), k=3).eigenvalues
    b = solve_two_field_eigs(mesh, order, TwoFieldParams(mu=2.0), k=3).eigenvalues
    assert np.allclose(b / a, 2.0, rtol=1e-10)


def test_first_eigenvalue_p1_square():
    lam = solve_two_field_eigs(unit_square_mesh(10), 1, k=1).eigenvalues[0]
    assert abs(lam - 55.8688) / 55.8688 <= 0.005


def test_first_eigenvalue_p2_square():
    lam = solve_two_field_eigs(unit_square_mesh(10), 2, k=1).eigenvalues[0]
    assert abs(lam - 52.389177613831528) / 52.389177613831528 <= 0.0005


def test_fourth_eigenvalue_p1_lshape():
    lam = solve_two_field_eigs(l_shaped_mesh(5), 1, k=4).eigenvalues[3]
    assert abs(lam - 58.6756) / 58.6756 <= 0.01


def test_eigenvectors_split_and_vanish_on_boundary():
    mesh = unit_square_mesh(6)
    sol = solve_two_field_eigs(mesh, 2, k=2)
    f = sol.fields(0)
    assert f[VELOCITY].shape == (2, sol.dof_map.space(VELOCITY).n_nodes)
    bnd = sol.dof_map.space(VELOCITY).boundary_nodes
    assert np.abs(f[VELOCITY][:, bnd]).max() == 0.0
    assert all(p.residual <= 1e-8 for p in sol.pairs)
    assert np.all(sol.eigenvalues > 0)


def test_zero_load_gives_zero_fields():
    u, p = solve_two_field_source(unit_square_mesh(4), 2)
    assert np.abs(u).max() == 0.0 and np.abs(p).max() == 0.0


def test_lumped_projection_runs_and_is_close():
    mesh = unit_square_mesh(8)
    a = assemble_two_field(mesh, 1).eigensolve(1).eigenvalues[0]
    b = assemble_two_field(mesh, 1, projection=LUMPED).eigensolve(1).eigenvalues[0]
    assert a != b and abs(a - b) / a < 0.05


@pytest.mark.parametrize("order,low", [(1, 0.9), (2, 1.8)])
def test_manufactured_velocity_rate(order, low):
    sizes = [8, 16, 32]
    errs = [manufactured_errors("two_field", order, n)["u_h1"] for n in sizes]
    r = rates(sizes, errs)
    assert np.all(np.diff(errs) < 0)
    assert r[-1] >= low


def test_divergence_residual_decreases(manufactured):
    out = []
    for n in (8, 16, 32):
        s = assemble_two_field(unit_square_mesh(n), 1)
        fields = s.solve_source(manufactured["f"])
        dm = s.dof_map
        x = np.concatenate([fields[VELOCITY].ravel(), fields[PRESSURE].ravel()])
        rows = np.arange(dm.field(PRESSURE).offset, dm.total_dofs)
        # (q_h, div u_h) for every pressure basis function
        g = s.galerkin[rows][:, :dm.field(PRESSURE).offset] @ x[:dm.field(PRESSURE).offset]
        out.append(np.linalg.norm(g))
    assert out[0] > out[1] > out[2]


def test_manufactured_mu_dependence():
    exact = _manufactured(3.0)
    s = assemble_two_field(unit_square_mesh(16), 2, TwoFieldParams(mu=3.0))
    err = source_errors(s, s.solve_source(exact["f"]), exact)
    assert err["u_h1"] < 2e-3 and err["p_l2"] < 1e-2


def test_system_is_sparse_and_square():
    s = assemble_two_field(unit_square_mesh(5), 2)
    assert sp.isspmatrix_csr(s.A) and s.A.shape == s.M.shape
    assert s.A.shape[0] == s.n_primal_free + s.n_aux
