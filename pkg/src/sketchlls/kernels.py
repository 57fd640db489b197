"""Matrix containers and the dense factorizations used by the solver.

Dense matrices are plain ``float64`` numpy arrays; sparse matrices are
``scipy.sparse.csr_array`` in canonical form (sorted, duplicate-free column
indices). The sketched matrix ``SA`` is always small and dense, so every
factorization here works on dense arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp


class NumericalError(ArithmeticError):
    """Base class for numerical failures raised by this package."""


class SingularTriangularError(NumericalError):
    pass


class RankZeroError(NumericalError):
    """A factorization detected numerical rank zero."""


# ---------------------------------------------------------------------------
# containers


def is_sparse(A) -> bool:
    return sp.issparse(A)


def as_dense(A) -> np.ndarray:
    """Return ``A`` as a finite 2-D float64 array."""
    if sp.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_csr(A) -> sp.csr_array:
    """Return ``A`` as a canonical CSR array with finite values."""
    A = sp.csr_array(A, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"expected a non-empty matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A.data)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_matrix(A):
    """Validate ``A`` and keep its storage kind (dense or CSR)."""
    return as_csr(A) if sp.issparse(A) else as_dense(A)


def nnz(A) -> int:
    if sp.issparse(A):
        return int(A.nnz)
    return int(np.count_nonzero(A))


def matvec(A, x, transpose: bool = False) -> np.ndarray:
    """Return ``A @ x`` or ``A.T @ x``."""
    x = np.asarray(x, dtype=np.float64)
    n, d = A.shape
    expected = n if transpose else d
    if x.shape[0] != expected:
        raise ValueError(
            f"dimension mismatch: operand has {x.shape[0]} rows, expected {expected}"
        )
    if transpose:
        return A.T @ x
    return A @ x


# ---------------------------------------------------------------------------
# SVD


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]


def svd_compact(A, rank_tol: float = 1e-12) -> SvdFactors:
    """Compact SVD keeping singular values above ``rank_tol * sigma_max``."""
    if rank_tol < 0:
        raise ValueError("rank_tol must be nonnegative")
    A = as_dense(A)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > rank_tol * s[0]))
    return SvdFactors(U=U[:, :r], sigma=s[:r], V=Vt[:r].T)


def singular_values(A) -> np.ndarray:
    return np.linalg.svd(as_dense(A), compute_uv=False)


# ---------------------------------------------------------------------------
# column-pivoted QR


@dataclass(frozen=True)
class CpqrFactors:
    """Rank-revealing factorization ``B = Q1 [R11 R12] Vhat^T``.

    ``perm`` gives the column pivoting. After :func:`complete_orthogonal` the
    right factor is no longer a permutation and is stored densely in ``v``.
    """

    q1: np.ndarray
    r11: np.ndarray
    r12: np.ndarray
    perm: np.ndarray
    v: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return self.r11.shape[0]

    @property
    def ncols(self) -> int:
        return self.perm.shape[0]

    def v1(self) -> np.ndarray:
        """Materialize the ``d x p`` factor ``V1``."""
        p = self.rank
        if self.v is not None:
            return self.v[:, :p]
        V1 = np.zeros((self.ncols, p))
        V1[self.perm[:p], np.arange(p)] = 1.0
        return V1

    def v1_apply(self, y: np.ndarray) -> np.ndarray:
        """``V1 @ y`` for a length-p vector (or p x k block)."""
        p = self.rank
        if self.v is not None:
            return self.v[:, :p] @ y
        out = np.zeros((self.ncols,) + y.shape[1:])
        out[self.perm[:p]] = y
        return out

    def v1t_apply(self, x: np.ndarray) -> np.ndarray:
        """``V1.T @ x`` for a length-d vector (or d x k block)."""
        p = self.rank
        if self.v is not None:
            return self.v[:, :p].T @ x
        return x[self.perm[:p]]


def _householder(x: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Reflector ``I - beta v v^T`` mapping ``x`` to ``alpha e_1``."""
    alpha = np.linalg.norm(x)
    v = x.copy()
    if alpha == 0.0:
        return v, 0.0, 0.0
    if x[0] >= 0:
        alpha = -alpha
    v[0] -= alpha
    vv = v @ v
    beta = 0.0 if vv == 0.0 else 2.0 / vv
    return v, beta, alpha


def cpqr(B, rcond: float = 1e-12) -> CpqrFactors:
    """Column-pivoted Householder QR of ``B`` truncated at numerical rank.

    The rank is the largest ``q`` with ``|r_qq| >= rcond * |r_11|``; the
    threshold is relative so that the rule does not depend on the scale of
    ``B``.
    """
    if not 0.0 < rcond < 1.0:
        raise ValueError("rcond must lie in (0, 1)")
    B = as_dense(B)
    Q, R, perm = scipy.linalg.qr(B, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diagonal(R))
    if diag.size == 0 or diag[0] == 0.0:
        raise RankZeroError("matrix is numerically zero")
    above = np.flatnonzero(diag >= rcond * diag[0])
    p = int(above[-1]) + 1
    return CpqrFactors(
        q1=np.ascontiguousarray(Q[:, :p]),
        r11=np.triu(R[:p, :p]),
        r12=R[:p, p:].copy(),
        perm=perm.astype(np.intp),
    )


def complete_orthogonal(f: CpqrFactors) -> CpqrFactors:
    """Zero ``R12`` by orthogonal transformations applied from the right.

    Row ``i`` of ``[R11 R12]`` (last row first) is reduced with a reflector
    acting on column ``i`` and the trailing ``d - p`` columns; the same
    reflectors are accumulated into a dense right factor.
    """
    p, d = f.rank, f.ncols
    if p < 1:
        raise RankZeroError("cannot complete a rank-zero factorization")
    if f.r12.size == 0 or not np.any(f.r12):
        return f
    T = np.hstack([f.r11, f.r12])
    V = f.v.copy() if f.v is not None else np.eye(d)[:, f.perm]
    tail = np.arange(p, d)
    for i in range(p - 1, -1, -1):
        cols = np.concatenate(([i], tail))
        x = T[i, cols]
        v, beta, alpha = _householder(x)
        if beta == 0.0:
            continue
        T[: i + 1, cols] -= np.outer(T[: i + 1, cols] @ v, beta * v)
        T[i, i] = alpha
        T[i, tail] = 0.0
        V[:, cols] -= np.outer(V[:, cols] @ v, beta * v)
    return CpqrFactors(
        q1=f.q1,
        r11=np.triu(T[:, :p]),
        r12=np.zeros((p, d - p)),
        perm=f.perm,
        v=V,
    )


# ---------------------------------------------------------------------------
# triangular systems


def tri_solve(R11, v, transpose: bool = False, perturb: float = 0.0) -> np.ndarray:
    """Solve ``R11 y = v`` (or ``R11^T y = v``) by substitution.

    With ``perturb > 0`` every division by a diagonal entry ``r_ii`` uses
    ``r_ii + perturb`` instead, which is the same as solving with the shifted
    diagonal.
    """
    if perturb < 0:
        raise ValueError("perturb must be nonnegative")
    R = np.asarray(R11, dtype=np.float64)
    diag = np.diagonal(R)
    if perturb > 0.0:
        R = R.copy()
        np.fill_diagonal(R, diag + perturb)
        diag = np.diagonal(R)
    if np.any(diag == 0.0):
        raise SingularTriangularError("zero on the diagonal of a triangular factor")
    return scipy.linalg.solve_triangular(
        R, v, trans="T" if transpose else "N", lower=False, check_finite=False
    )


def tri_cond_estimate(R11) -> float:
    """Diagonal-ratio lower bound on the 2-norm condition number of ``R11``."""
    diag = np.abs(np.diagonal(np.asarray(R11)))
    lo = diag.min()
    if lo == 0.0:
        return float("inf")
    return float(diag.max() / lo)
