"""Independent checks: a scalar Laplacian oracle, a dense pencil solver and
reference fixtures stored under ``testdata/``."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .eigsolve import shift_invert_arnoldi
from .fespace import scalar_space
from .forms import FieldOperator, form_matrix, integrator, value_op
from .mesh import unit_square_mesh

DENSE_LIMIT = 600
FIXTURE_DIR = Path(__file__).resolve().parents[2] / "testdata"
NOTES_FILE = "reference_rows.txt"


def laplacian_oracle(n: int, order: int = 1) -> float:
    """Smallest Dirichlet eigenvalue of ``-Laplace`` on the unit square.

    The exact value is ``2 pi^2``.
    """
    if n < 4:
        raise ValueError("laplacian oracle needs n >= 4")
    mesh = unit_square_mesh(n)
    space = scalar_space(mesh, order)
    integ = integrator(mesh, space)
    grad = FieldOperator(np.transpose(integ.dphi, (0, 1, 3, 2)), space.cell_nodes)
    val = value_op(integ, [space.cell_nodes])
    nn = space.n_nodes
    K = form_matrix((nn, nn), integ, grad, grad)
    M = form_matrix((nn, nn), integ, val, val)
    free = np.setdiff1d(np.arange(nn), space.boundary_nodes)
    K = K[free][:, free]
    M = M[free][:, free]
    return float(shift_invert_arnoldi(K, M, 0.0, 1).eigenvalues[0])


def dense_cross_check(A, M, k: int) -> np.ndarray:
    """The ``k`` smallest finite eigenvalues of ``A x = lambda M x``, densely.

    ``A`` must be nonsingular and ``M`` symmetric positive semidefinite with
    ``M = R W R^T`` on its range. The finite eigenvalues are the reciprocals
    of the eigenvalues of ``W R^T A^{-1} R``, so the null space of ``M``
    (the infinite eigenvalues) never enters.
    """
    A = A.toarray() if sp.issparse(A) else np.asarray(A, float)
    M = M.toarray() if sp.issparse(M) else np.asarray(M, float)
    n = A.shape[0]
    if A.shape != (n, n) or M.shape != (n, n):
        raise ValueError("A and M must be square matrices of equal size")
    if n > DENSE_LIMIT:
        raise ValueError(f"dense cross-check is limited to dimension {DENSE_LIMIT}, got {n}")
    if not np.any(M):
        raise ValueError("mass matrix is zero: the pencil has no finite eigenvalues")
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    keep = w > 1e-12 * w.max()
    R, w = Q[:, keep], w[keep]
    mu = sla.eigvals(w[:, None] * (R.T @ sla.solve(A, R)))
    # constrained velocity modes (infinite eigenvalues) show up as roundoff-level mu
    mu = mu[np.abs(mu) > 1e-10 * np.abs(mu).max()]
    if len(mu) < k:
        raise ValueError(f"pencil has only {len(mu)} finite eigenvalues, {k} requested")
    lam = 1.0 / mu
    lam = lam[np.argsort(lam.real)][:k]
    if np.any(np.abs(lam.imag) > 1e-8 * np.maximum(1.0, np.abs(lam.real))):
        raise ValueError(f"complex eigenvalues in the dense spectrum: {lam}")
    return lam.real


def fixture_names(root=None) -> list:
    root = Path(root) if root is not None else FIXTURE_DIR
    return sorted(p.stem for p in root.glob("*.json"))


def load_fixture(name: str, root=None) -> dict:
    """Fixture ``name``: study config fields plus cited expected rows."""
    root = Path(root) if root is not None else FIXTURE_DIR
    with open(root / f"{name}.json", encoding="utf-8") as fh:
        data = json.load(fh)
    if "citation" not in data or not all("citation" in r for r in data.get("rows", [])):
        raise ValueError(f"fixture {name!r} has values without citations")
    return data


def citation_notes(root=None) -> str:
    root = Path(root) if root is not None else FIXTURE_DIR
    return (root / NOTES_FILE).read_text(encoding="utf-8")
