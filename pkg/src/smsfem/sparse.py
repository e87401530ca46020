"""Sparse matrix storage, saddle-point assembly and direct solves.

Matrices are collected as coordinate triplets during finite element
assembly and compressed to CSR once complete.  The saddle-point systems
arising from the constrained least-squares formulation are symmetric
indefinite; we factor them with a sparse LU (with a dense fallback at
small sizes) and verify the residual afterwards.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class StructuralError(ValueError):
    """Raised for out-of-range indices or malformed matrix structure."""


class CapacityError(ValueError):
    """Raised when a dense diagnostic is requested on too large a matrix."""


class RankDeficiencyError(RuntimeError):
    """Raised when a factorization is singular to working precision.

    Carries ``near_null_vector`` when one could be estimated.
    """

    def __init__(self, message, near_null_vector=None):
        super().__init__(message)
        self.near_null_vector = near_null_vector


class SparseMatrix:
    """Immutable sparse matrix in CSR form built from coordinate triplets."""

    def __init__(self, n_rows, n_cols, csr):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.csr = csr

    @property
    def nnz(self):
        return self.csr.nnz

    def toarray(self):
        return self.csr.toarray()

    def __matmul__(self, other):
        return self.csr @ other

    def entries(self):
        """Return (row, col, value) arrays in deterministic CSR order."""
        coo = self.csr.tocoo()
        return coo.row, coo.col, coo.data

    def dump(self, path):
        """Write a plain-text dump: 'rows cols nnz' then 'row col value' lines."""
        rows, cols, vals = self.entries()
        with open(path, "w") as fh:
            fh.write("%d %d %d\n" % (self.n_rows, self.n_cols, self.nnz))
            for r, c, v in zip(rows, cols, vals):
                fh.write("%d %d %.17g\n" % (r, c, v))


def compress(triplets, n_rows, n_cols):
    """Compress coordinate triplets (row, col, value) to a SparseMatrix.

    Duplicate coordinates are summed.  The result is independent of the
    order of the triplets.
    """
    trip = list(triplets)
    if trip:
        rows = np.array([t[0] for t in trip], dtype=np.int64)
        cols = np.array([t[1] for t in trip], dtype=np.int64)
        vals = np.array([t[2] for t in trip], dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise StructuralError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise StructuralError("col index out of range")
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)
    csr = sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
    csr.sum_duplicates()
    csr.sort_indices()
    return SparseMatrix(n_rows, n_cols, csr)


def from_csr(csr):
    csr = sp.csr_matrix(csr)
    csr.sum_duplicates()
    csr.sort_indices()
    return SparseMatrix(csr.shape[0], csr.shape[1], csr)


class SaddleSystem:
    """Block system of the constrained least-squares optimality conditions.

    Unsymmetrized layout (multiplier z):

        [ S   0  -A^T ] [u]   [residual_load]
        [ 0   0  -E^T ] [t] = [0            ]
        [ A   E   0   ] [z]   [load         ]

    The substitution z~ = -z makes the matrix symmetric; ``symmetrized``
    records which convention ``matrix()`` returns.
    """

    def __init__(self, S, A, E, residual_load, load):
        self.S = S
        self.A = A
        self.E = E
        self.residual_load = np.asarray(residual_load, dtype=float)
        self.load = np.asarray(load, dtype=float)
        self.n = S.n_rows
        self.m = E.n_cols
        self.symmetrized = False

    def matrix(self):
        S = self.S.csr
        A = self.A.csr
        E = self.E.csr
        n, m = self.n, self.m
        sgn = 1.0 if self.symmetrized else -1.0
        Z_nm = sp.csr_matrix((n, m))
        Z_mm = sp.csr_matrix((m, m))
        Z_nn = sp.csr_matrix((n, n))
        M = sp.bmat(
            [
                [S, Z_nm, sgn * A.T],
                [Z_nm.T, Z_mm, sgn * E.T],
                [A, E, Z_nn],
            ],
            format="csr",
        )
        if M.shape != (2 * n + m, 2 * n + m):
            raise StructuralError("inconsistent saddle block sizes")
        return M

    def rhs(self):
        return np.concatenate([self.residual_load, np.zeros(self.m), self.load])

    def symmetrize(self):
        """Switch to the z~ = -z convention; matrix() becomes symmetric."""
        self.symmetrized = True
        return self


def solve_symmetric_indefinite(system, rhs=None):
    """Solve a SaddleSystem (or a raw square SparseMatrix with rhs).

    Returns the solution vector; verifies the relative residual
    ||Mx - r|| / max(||r||, 1) <= 1e-8 with one step of iterative
    refinement if the first factorization misses the tolerance.
    """
    if isinstance(system, SaddleSystem):
        M = system.matrix()
        r = system.rhs() if rhs is None else np.asarray(rhs, dtype=float)
    else:
        M = system.csr if isinstance(system, SparseMatrix) else sp.csr_matrix(system)
        r = np.asarray(rhs, dtype=float)
    if M.shape[0] != M.shape[1]:
        raise StructuralError("system must be square")
    x = _direct_solve(M, r)
    res = np.linalg.norm(M @ x - r) / max(np.linalg.norm(r), 1.0)
    if res > 1e-8:
        # one residual-correction step
        dx = _direct_solve(M, r - M @ x)
        x = x + dx
        res = np.linalg.norm(M @ x - r) / max(np.linalg.norm(r), 1.0)
        if res > 1e-8:
            raise RankDeficiencyError(
                "direct solve residual %.3e exceeds tolerance" % res
            )
    return x


def _direct_solve(M, r):
    n = M.shape[0]
    if n == 0:
        return np.zeros(0)
    try:
        with np.errstate(all="ignore"):
            lu = spla.splu(M.tocsc())
            x = lu.solve(r)
        if not np.all(np.isfinite(x)):
            raise RuntimeError("non-finite solution")
        return x
    except (RuntimeError, ValueError):
        pass
    # dense fallback; also produces the near-null vector on failure
    A = M.toarray()
    try:
        x = np.linalg.solve(A, r)
        if np.all(np.isfinite(x)):
            return x
    except np.linalg.LinAlgError:
        pass
    u, s, vt = np.linalg.svd(A)
    tol = s[0] * max(A.shape) * np.finfo(float).eps if s.size else 0.0
    if s.size == 0 or s[-1] <= tol:
        raise RankDeficiencyError(
            "matrix singular to working precision",
            near_null_vector=vt[-1] if s.size else None,
        )
    return vt.T @ ((u.T @ r) / s)


def min_singular_diagnostic(matrix):
    """Smallest singular value and right singular vector via dense SVD.

    Guarded to matrices of at most 2000 rows.
    """
    if matrix.n_rows > 2000:
        raise CapacityError("matrix too large for dense diagnostic")
    A = matrix.toarray()
    u, s, vt = np.linalg.svd(A)
    return float(s[-1]), vt[-1]
