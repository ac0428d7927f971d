"""Shift-invert Arnoldi for ``A x = lambda M x`` with singular ``M``.

Eigenvalues nearest the shift ``sigma`` are the largest-magnitude
eigenvalues ``nu = 1 / (lambda - sigma)`` of ``(A - sigma M)^{-1} M``.
The infinite eigenvalues coming from the massless rows (pressure, stress,
projection unknowns) map to ``nu = 0`` and never surface. Arnoldi
iterations use ARPACK's implicitly restarted nonsymmetric driver.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .sparse import SingularMatrixError, lu_factor

log = logging.getLogger(__name__)

SEED = 0x5EED


class EigenSolverError(RuntimeError):
    pass


class ShiftRejectedError(EigenSolverError):
    """``A - sigma M`` is singular; retry with a perturbed shift."""


class ConvergenceError(EigenSolverError):
    pass


class SpectralAnomalyError(EigenSolverError):
    """Complex Ritz values among the requested pairs."""


@dataclass(frozen=True, eq=False)
class EigenPair:
    lam: float
    vector: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class EigenSolution:
    pairs: list
    sigma: float
    stats: dict = field(default_factory=dict)
    dof_map: object = None

    def fields(self, i: int) -> dict:
        """Eigenvector ``i`` split by field (needs a dof map)."""
        return self.dof_map.split(self.pairs[i].vector)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    @property
    def vectors(self) -> np.ndarray:
        return np.column_stack([p.vector for p in self.pairs]) if self.pairs else np.zeros((0, 0))

    def __len__(self):
        return len(self.pairs)


def pair_residual(A, M, lam, x) -> float:
    """``||A x - lam M x|| / ||A x||``."""
    ax = A @ x
    den = np.linalg.norm(ax)
    if den == 0.0:
        return 0.0 if np.linalg.norm(M @ x) == 0.0 else np.inf
    return float(np.linalg.norm(ax - lam * (M @ x)) / den)


def _m_orthonormalize_clusters(lams, vecs, M, rtol=1e-6):
    """M-orthonormalize eigenvectors of (numerically) repeated eigenvalues."""
    vecs = vecs.copy()
    n = len(lams)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(lams[j] - lams[i]) <= rtol * max(1.0, abs(lams[i])):
            j += 1
        if j - i > 1:
            block = vecs[:, i:j]
            for a in range(block.shape[1]):
                for b in range(a):
                    block[:, a] -= (block[:, b] @ (M @ block[:, a])) * block[:, b]
                nrm = np.sqrt(max(block[:, a] @ (M @ block[:, a]), 0.0))
                if nrm > 0.0:
                    block[:, a] /= nrm
            vecs[:, i:j] = block
        i = j
    return vecs


def shift_invert_arnoldi(A, M, sigma: float = 0.0, k: int = 1, tol: float = 1e-8,
                         max_restarts: int = 300, ncv: int | None = None) -> EigenSolution:
    """The ``k`` finite eigenvalues of ``(A, M)`` nearest ``sigma``.

    Returns pairs sorted ascending by eigenvalue (ties by residual) with
    unit 2-norm real eigenvectors; vectors of numerically repeated
    eigenvalues are M-orthogonalized. Raises :class:`ShiftRejectedError`,
    :class:`ConvergenceError` or :class:`SpectralAnomalyError`.
    """
    A = sp.csr_matrix(A)
    M = sp.csr_matrix(M)
    n = A.shape[0]
    if A.shape != (n, n) or M.shape != (n, n):
        raise ValueError("A and M must be square matrices of equal size")
    if k < 1:
        raise ValueError("k must be at least 1")
    rank_m = int(np.count_nonzero(abs(M).sum(axis=1)))
    if rank_m == 0:
        raise ValueError("mass matrix is zero: the pencil has no finite eigenvalues")
    try:
        lu = lu_factor(A - sigma * M)
    except SingularMatrixError as exc:
        raise ShiftRejectedError(f"A - sigma M singular at sigma={sigma:g}: {exc}") from None

    n_solves = [0]

    def op(x):
        n_solves[0] += 1
        return lu.solve(M @ x)

    rng = np.random.default_rng(SEED)
    # two applications of the operator purge components along the
    # (possibly defective) null space belonging to infinite eigenvalues
    v0 = op(op(rng.standard_normal(n)))
    v0 /= np.linalg.norm(v0)

    if k >= n - 1 or n <= 60:
        return _dense_small(A, M, sigma, k, tol, lu)

    ncv = ncv or max(2 * k + 10, 40)
    ncv = min(ncv, n - 1)
    operator = spla.LinearOperator((n, n), matvec=op, dtype=float)
    try:
        nu, vecs = spla.eigs(operator, k=k, which="LM", v0=v0, ncv=ncv,
                             maxiter=max_restarts, tol=tol * 1e-3)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"{len(exc.eigenvalues)} of {k} eigenvalues converged "
            f"after {max_restarts} restarts") from None
    return _finish(A, M, sigma, k, tol, nu, vecs, op, {"operator_applications": n_solves[0],
                                                       "ncv": ncv})


def _dense_small(A, M, sigma, k, tol, lu):
    n = A.shape[0]
    T = np.column_stack([lu.solve(M @ e) for e in np.eye(n)])
    nu, vecs = np.linalg.eig(T)
    order = np.argsort(-np.abs(nu))
    keep = order[np.abs(nu[order]) > 1e-12 * max(1.0, np.abs(nu).max())][:k]
    if len(keep) < k:
        raise EigenSolverError(f"pencil has only {len(keep)} finite eigenvalues, {k} requested")
    return _finish(A, M, sigma, k, tol, nu[keep], vecs[:, keep], lambda x: T @ x,
                   {"operator_applications": n, "ncv": n})


def _finish(A, M, sigma, k, tol, nu, vecs, op, stats):
    lam = sigma + 1.0 / nu
    bad = np.abs(lam.imag) > 1e-8 * np.maximum(1.0, np.abs(lam.real))
    if np.any(bad):
        raise SpectralAnomalyError(f"complex Ritz values: {lam[bad]}")
    lam = lam.real
    vecs = vecs.copy()
    out = []
    for i in range(len(lam)):
        v = vecs[:, i]
        # fix the complex phase, then take the real part
        j = np.argmax(np.abs(v))
        v = (v * np.exp(-1j * np.angle(v[j]))).real
        vecs[:, i] = v
    vecs = vecs.real
    order = np.argsort(lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    vecs = _m_orthonormalize_clusters(lam, vecs, M)
    for i in range(len(lam)):
        v = vecs[:, i] / np.linalg.norm(vecs[:, i])
        res = pair_residual(A, M, lam[i], v)
        if res > tol:
            # one step of inverse iteration polishes clustered pairs
            w = op(v)
            w /= np.linalg.norm(w)
            res_w = pair_residual(A, M, lam[i], w)
            if res_w < res:
                v, res = w, res_w
        out.append(EigenPair(float(lam[i]), v, float(res)))
    out.sort(key=lambda p: (p.lam, p.residual))
    worst = max(p.residual for p in out)
    if worst > tol:
        raise ConvergenceError(f"residual {worst:.2e} above tolerance {tol:g}")
    stats = dict(stats, max_residual=worst)
    log.debug("shift-invert: k=%d, stats=%s", k, stats)
    return EigenSolution(out, float(sigma), stats)


@dataclass(frozen=True)
class ResidualReport:
    residuals: np.ndarray
    flagged: np.ndarray  # indices of pairs above tolerance

    @property
    def ok(self) -> bool:
        return len(self.flagged) == 0


def residual_report(A, M, solution: EigenSolution, tol: float = 1e-8) -> ResidualReport:
    res = np.array([pair_residual(A, M, p.lam, p.vector) for p in solution.pairs])
    return ResidualReport(res, np.nonzero(res > tol)[0])
