"""Deterministic generators for random least-squares test problems.

Dense families follow the Blendenpik test set (incoherent, semi-coherent,
coherent); sparse families are a pattern-plus-scaling stand-in for MATLAB's
``sprandn(n, d, 0.01, 1e-6)`` with optional heavy-tailed row scaling.
Every generator is a pure function of its dimensions and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .rng import derive_seed, stream

FAMILIES = (
    "incoherent_dense",
    "semicoherent_dense",
    "coherent_dense",
    "incoherent_sparse",
    "semicoherent_sparse",
    "coherent_sparse",
    "identity_block",
    "from_file",
)
SPARSE_FAMILIES = frozenset({"incoherent_sparse", "semicoherent_sparse", "coherent_sparse"})


def _check_dims(n: int, d: int) -> None:
    if d < 1 or n < d:
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")


def _haar_columns(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, d)))
    signs = np.sign(np.diagonal(R))
    signs[signs == 0] = 1.0
    return Q * signs


def gen_incoherent_dense(n: int, d: int, seed: int = 0) -> np.ndarray:
    """``U diag(sigma) V^T`` with Haar factors and sigma evenly spaced in [1, 1e6]."""
    _check_dims(n, d)
    U = _haar_columns(stream(seed, "incoherent_dense", "U"), n, d)
    V = _haar_columns(stream(seed, "incoherent_dense", "V"), d, d)
    sigma = np.linspace(1.0, 1e6, d) if d > 1 else np.ones(1)
    return (U * sigma) @ V.T


def gen_semicoherent_dense(n: int, d: int, seed: int = 0) -> np.ndarray:
    """``[[B, 0], [0, I_{d/2}]] + 1e-8 J`` with ``B`` incoherent dense."""
    _check_dims(n, d)
    if d % 2:
        raise ValueError("semi-coherent dense matrices need an even column count")
    h = d // 2
    A = np.zeros((n, d))
    A[: n - h, :h] = gen_incoherent_dense(n - h, h, derive_seed(seed, "B"))
    A[n - h :, h:] = np.eye(h)
    return A + 1e-8


def gen_coherent_dense(n: int, d: int, seed: int = 0) -> np.ndarray:
    """``[I_d; 0] + 1e-8 J``. The seed is accepted for uniformity and ignored."""
    _check_dims(n, d)
    A = np.full((n, d), 1e-8)
    A[np.arange(d), np.arange(d)] += 1.0
    return A


def gen_incoherent_sparse(
    n: int, d: int, seed: int = 0, density: float = 0.01, kappa: float = 1e6
) -> sp.csr_array:
    """Bernoulli(density) pattern, standard normal values, columns scaled 1 -> 1/kappa.

    The geometric column scaling gives a condition number of roughly
    ``kappa``, standing in for MATLAB's prescribed reciprocal condition.
    """
    _check_dims(n, d)
    if n * d * density < d:
        raise ValueError("density too low: expected fewer than one nonzero per column")
    rng = stream(seed, "incoherent_sparse")
    counts = rng.binomial(n, density, size=d)
    rows = np.concatenate([np.sort(rng.choice(n, size=k, replace=False)) for k in counts])
    values = rng.standard_normal(rows.shape[0])
    scale = np.geomspace(1.0, 1.0 / kappa, d) if d > 1 else np.ones(1)
    indptr = np.concatenate(([0], np.cumsum(counts)))
    values *= np.repeat(scale, counts)
    return sp.csr_array(sp.csc_array((values, rows, indptr), shape=(n, d)))


def row_scaling(n: int, seed: int, power: int) -> np.ndarray:
    """Diagonal of ``Dhat**power`` with ``Dhat`` i.i.d. standard normal."""
    g = stream(seed, "Dhat").standard_normal(n)
    return g**power


def _scaled_sparse(n: int, d: int, seed: int, power: int) -> sp.csr_array:
    B = gen_incoherent_sparse(n, d, derive_seed(seed, "B"))
    D = row_scaling(n, seed, power)
    A = sp.csr_array(sp.diags_array(D) @ B)
    A.sort_indices()
    return A


def gen_semicoherent_sparse(n: int, d: int, seed: int = 0) -> sp.csr_array:
    return _scaled_sparse(n, d, seed, 5)


def gen_coherent_sparse(n: int, d: int, seed: int = 0) -> sp.csr_array:
    return _scaled_sparse(n, d, seed, 20)


def gen_semicoherent_hybrid(n: int, d: int, seed: int = 0) -> np.ndarray:
    """Semi-coherent block layout with an incoherent *sparse* ``B`` block.

    This is the matrix on which 1-hashing visibly breaks down: the identity
    block puts ``d/2`` rows of leverage one next to a sparse Gaussian block.
    Returned dense because of the ``1e-8 J`` shift.
    """
    _check_dims(n, d)
    if d % 2:
        raise ValueError("semi-coherent matrices need an even column count")
    h = d // 2
    A = np.zeros((n, d))
    A[: n - h, :h] = gen_incoherent_sparse(n - h, h, derive_seed(seed, "B")).toarray()
    A[n - h :, h:] = np.eye(h)
    return A + 1e-8


def gen_identity_block(n: int, d: int, r: int) -> np.ndarray:
    """``[[I_r, 0], [0, 0]]`` of shape ``n x d``."""
    if not 1 <= r <= d <= n:
        raise ValueError(f"need 1 <= r <= d <= n, got r={r}, d={d}, n={n}")
    A = np.zeros((n, d))
    A[np.arange(r), np.arange(r)] = 1.0
    return A


def rhs_ones(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    return np.ones(n)


@dataclass(frozen=True)
class ProblemSpec:
    family: str
    n: int = 0
    d: int = 0
    seed: int = 0
    r: int | None = None
    path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "from_file":
            if not self.path:
                raise ValueError("from_file problems need a path")
        else:
            _check_dims(self.n, self.d)
        if self.family == "identity_block" and (self.r is None or self.r > self.d):
            raise ValueError("identity_block needs a rank r <= d")

    @property
    def name(self) -> str:
        if self.family == "from_file":
            return self.path
        tag = f"{self.family}_{self.n}x{self.d}"
        if self.family == "identity_block":
            tag += f"_r{self.r}"
        return f"{tag}_s{self.seed}"

    def build(self):
        if self.family == "from_file":
            from .mmio import read_matrix_market

            return read_matrix_market(self.path)
        if self.family == "identity_block":
            return gen_identity_block(self.n, self.d, self.r)
        return _BUILDERS[self.family](self.n, self.d, self.seed)


_BUILDERS = {
    "incoherent_dense": gen_incoherent_dense,
    "semicoherent_dense": gen_semicoherent_dense,
    "coherent_dense": gen_coherent_dense,
    "incoherent_sparse": gen_incoherent_sparse,
    "semicoherent_sparse": gen_semicoherent_sparse,
    "coherent_sparse": gen_coherent_sparse,
}
