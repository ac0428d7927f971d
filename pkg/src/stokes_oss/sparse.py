"""CSR assembly from triplets and sparse LU solves.

Storage is :class:`scipy.sparse.csr_matrix`; factorization is SuperLU with
a COLAMD fill-reducing column ordering.
"""
from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(ArithmeticError):
    """Structurally or numerically singular matrix."""


class Triplets:
    """Growable (row, col, value) buffer for element contributions."""

    def __init__(self):
        self._rows, self._cols, self._vals = [], [], []

    def add(self, rows, cols, values):
        rows, cols, values = np.broadcast_arrays(rows, cols, values)
        self._rows.append(np.ravel(rows))
        self._cols.append(np.ravel(cols))
        self._vals.append(np.ravel(values).astype(float))

    def add_local(self, test_dofs, trial_dofs, local, scale=1.0):
        """Scatter (T, a, b) local blocks at (test_dofs[t, a], trial_dofs[t, b])."""
        r = np.broadcast_to(test_dofs[:, :, None], local.shape)
        c = np.broadcast_to(trial_dofs[:, None, :], local.shape)
        self.add(r, c, scale * local)

    def arrays(self):
        if not self._rows:
            z = np.zeros(0, np.int64)
            return z, z, np.zeros(0)
        return (np.concatenate(self._rows).astype(np.int64),
                np.concatenate(self._cols).astype(np.int64),
                np.concatenate(self._vals))


def assemble_csr(rows: int, cols: int, triplets) -> sp.csr_matrix:
    """Sum ``(i, j, v)`` triplets into a ``rows x cols`` CSR matrix.

    ``triplets`` is a :class:`Triplets` buffer, a tuple of three arrays, or
    an iterable of ``(i, j, v)`` tuples. Duplicates are summed after sorting
    by ``(i, j, v)``, so the result is bitwise independent of triplet order.
    """
    if isinstance(triplets, Triplets):
        i, j, v = triplets.arrays()
    elif isinstance(triplets, tuple) and len(triplets) == 3 and np.ndim(triplets[0]) == 1:
        i, j, v = (np.asarray(a) for a in triplets)
    else:
        data = list(triplets)
        i = np.array([t[0] for t in data], dtype=np.int64)
        j = np.array([t[1] for t in data], dtype=np.int64)
        v = np.array([t[2] for t in data], dtype=float)
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    v = np.asarray(v, dtype=float)
    if i.size and (i.min() < 0 or i.max() >= rows or j.min() < 0 or j.max() >= cols):
        raise ValueError("triplet index out of range")
    if np.any(np.isnan(v)):
        raise ValueError("NaN value in triplets")
    if i.size == 0:
        return sp.csr_matrix((rows, cols))
    order = np.lexsort((v, j, i))
    i, j, v = i[order], j[order], v[order]
    key = i * cols + j
    starts = np.concatenate([[0], np.nonzero(np.diff(key))[0] + 1])
    sums = np.add.reduceat(v, starts)
    ui, uj = i[starts], j[starts]
    row_ptr = np.zeros(rows + 1, dtype=np.int64)
    np.add.at(row_ptr, ui + 1, 1)
    np.cumsum(row_ptr, out=row_ptr)
    m = sp.csr_matrix((sums, uj, row_ptr), shape=(rows, cols))
    m.has_sorted_indices = True
    return m


def matvec(matrix, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (matrix.shape[1],):
        raise ValueError(f"vector length {x.shape} does not match {matrix.shape[1]} columns")
    return matrix @ x


class LuFactors:
    """Sparse LU factorization with row pivoting and COLAMD column ordering."""

    def __init__(self, matrix, pivot_tol: float = 1e-14):
        a = sp.csc_matrix(matrix, dtype=float)
        if a.shape[0] != a.shape[1]:
            raise ValueError("LU factorization needs a square matrix")
        self.shape = a.shape
        scale = abs(a).max() if a.nnz else 0.0
        if scale == 0.0:
            raise SingularMatrixError("zero matrix")
        try:
            self._lu = spla.splu(a, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularMatrixError(str(exc)) from None
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() < pivot_tol * scale:
            raise SingularMatrixError(
                f"pivot {pivots.min():.3e} below {pivot_tol:g} * max|a_ij|")

    @property
    def fill_nnz(self) -> int:
        return self._lu.L.nnz + self._lu.U.nnz

    def solve(self, rhs) -> np.ndarray:
        b = np.asarray(rhs, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"rhs length {b.shape[0]} does not match {self.shape[0]}")
        return self._lu.solve(b)


def lu_factor(matrix, pivot_tol: float = 1e-14) -> LuFactors:
    return LuFactors(matrix, pivot_tol)


def solve(factors: LuFactors, rhs) -> np.ndarray:
    return factors.solve(rhs)


def write_matrix_market(path, matrix, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
