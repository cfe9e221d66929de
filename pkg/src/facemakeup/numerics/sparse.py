"""Sparse symmetric-positive-definite systems and a preconditioned CG solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from ..errors import DimensionMismatch, NotConverged

SYMMETRY_TOL = 1e-12


@dataclass
class SparseMatrix:
    """Square-or-rectangular sparse matrix assembled from (row, col, value) triplets.

    Storage is compressed-row (CSR); duplicate (row, col) pairs are summed
    during assembly.  When ``symmetric`` is set the matrix is verified to
    match its transpose within ``SYMMETRY_TOL``.
    """

    csr: scipy.sparse.csr_matrix
    symmetric: bool = False

    @classmethod
    def from_triplets(cls, rows, cols, values, shape, symmetric=False) -> "SparseMatrix":
        coo = scipy.sparse.coo_matrix((values, (rows, cols)), shape=shape)
        csr = coo.tocsr()
        csr.sum_duplicates()
        mat = cls(csr=csr, symmetric=symmetric)
        if symmetric:
            asym = abs(csr - csr.T).max() if csr.nnz else 0.0
            if asym > SYMMETRY_TOL:
                raise DimensionMismatch(
                    f"matrix flagged symmetric but |A - A^T| = {asym:.3e}"
                )
        return mat

    @classmethod
    def identity(cls, n) -> "SparseMatrix":
        return cls(csr=scipy.sparse.identity(n, format="csr"), symmetric=True)

    @classmethod
    def from_scipy(cls, mat, symmetric=False) -> "SparseMatrix":
        return cls(csr=scipy.sparse.csr_matrix(mat), symmetric=symmetric)

    @property
    def rows(self) -> int:
        return self.csr.shape[0]

    @property
    def cols(self) -> int:
        return self.csr.shape[1]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr.dot(x)

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def dense(self) -> np.ndarray:
        return self.csr.toarray()

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        return SparseMatrix(
            csr=(self.csr + other.csr).tocsr(),
            symmetric=self.symmetric and other.symmetric,
        )


def cg_solve(A: SparseMatrix, b: np.ndarray, tol: float = 1e-8,
             max_iter: int = 10000) -> np.ndarray:
    """Solve A x = b for SPD A with Jacobi-preconditioned conjugate gradients.

    Converges when the relative residual ||Ax - b|| / ||b|| drops below
    ``tol``; raises :class:`NotConverged` (carrying the final residual) after
    ``max_iter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=np.float64).ravel()
    if A.rows != A.cols:
        raise DimensionMismatch(f"matrix is {A.rows}x{A.cols}, not square")
    if A.rows != b.shape[0]:
        raise DimensionMismatch(
            f"matrix is {A.rows}x{A.cols} but right-hand side has {b.shape[0]} entries"
        )

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)

    diag = A.diagonal()
    # SPD implies strictly positive diagonal; guard anyway so a bad assembly
    # fails loudly instead of dividing by zero.
    if np.any(diag <= 0):
        raise DimensionMismatch("non-positive diagonal entry; matrix is not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r.dot(z)

    for _ in range(max_iter):
        Ap = A.matvec(p)
        alpha = rz / p.dot(Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / b_norm
        if res <= tol:
            return x
        z = inv_diag * r
        rz_next = r.dot(z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    res = np.linalg.norm(A.matvec(x) - b) / b_norm
    raise NotConverged(
        f"CG did not reach tol={tol:g} in {max_iter} iterations (residual {res:.3e})",
        residual=res,
        iterations=max_iter,
    )
