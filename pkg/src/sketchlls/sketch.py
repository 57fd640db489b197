"""Random sketching matrices and their application to matrices and vectors.

A :class:`SketchSpec` describes a distribution; :func:`realize` draws one
sketch from it for a given input row count ``n``. Realized sketches are
immutable and expose ``apply``, which maps an ``n x d`` matrix (dense or
CSR) or a length-``n`` vector to its dense sketch.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .rng import derive_seed, stream

KINDS = ("s_hashing", "s_hashing_variant", "gaussian", "sampling", "hr_dht", "sr_dht", "hrht")
# kinds whose construction uses the nonzeros-per-column parameter s
USES_S = frozenset({"s_hashing", "s_hashing_variant", "hr_dht", "hrht"})


@dataclass(frozen=True)
class SketchSpec:
    kind: str
    m: int
    s: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sketch kind {self.kind!r}; expected one of {KINDS}")
        if self.m < 1:
            raise ValueError("sketch must have at least one row")
        if self.kind in USES_S and not 1 <= self.s <= self.m:
            raise ValueError(f"need 1 <= s <= m, got s={self.s}, m={self.m}")

    def with_seed(self, seed: int) -> SketchSpec:
        return SketchSpec(self.kind, self.m, self.s, seed)


def _check_rows(n_expected: int, X) -> None:
    if X.shape[0] != n_expected:
        raise ValueError(
            f"dimension mismatch: sketch expects {n_expected} rows, operand has {X.shape[0]}"
        )


def _dense_result(Y) -> np.ndarray:
    if sp.issparse(Y):
        Y = Y.toarray()
    return np.asarray(Y, dtype=np.float64)


class _Sketch:
    m: int
    n: int

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    def materialize(self) -> np.ndarray:
        """Dense ``m x n`` matrix of the sketch (small sizes only)."""
        return self.apply(np.eye(self.n))


@dataclass(frozen=True, eq=False)
class HashSketch(_Sketch):
    """Sparse sketch stored column-wise: ``S[:, j]`` has entries ``vals`` at ``rows``."""

    m: int
    n: int
    indptr: np.ndarray
    rows: np.ndarray
    vals: np.ndarray

    @cached_property
    def matrix(self) -> sp.csc_array:
        return sp.csc_array((self.vals, self.rows, self.indptr), shape=(self.m, self.n))

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return self.rows[lo:hi], self.vals[lo:hi]

    def support_sizes(self) -> np.ndarray:
        """Number of nonzero entries per column."""
        cols = np.repeat(np.arange(self.n), np.diff(self.indptr))
        return np.bincount(cols[self.vals != 0.0], minlength=self.n)

    def apply(self, X) -> np.ndarray:
        _check_rows(self.n, X)
        return _dense_result(self.matrix @ X)


def _from_draws(m: int, n: int, rows: np.ndarray, vals: np.ndarray) -> HashSketch:
    """Assemble a column-sorted HashSketch, summing coincident draws."""
    per_col = rows.shape[1]
    cols = np.repeat(np.arange(n), per_col)
    S = sp.csc_array((vals.ravel(), (rows.ravel(), cols)), shape=(m, n))
    S.sum_duplicates()
    S.sort_indices()
    return HashSketch(m, n, S.indptr.copy(), S.indices.copy(), S.data.copy())


def _distinct_rows(rng: np.random.Generator, m: int, s: int, n: int) -> np.ndarray:
    """``n`` independent uniform s-subsets of ``range(m)`` via Floyd's method."""
    rows = np.empty((n, s), dtype=np.int64)
    for t, top in enumerate(range(m - s, m)):
        cand = rng.integers(0, top + 1, size=n)
        taken = (rows[:, :t] == cand[:, None]).any(axis=1)
        rows[:, t] = np.where(taken, top, cand)
    return rows


def _signs(rng: np.random.Generator, shape) -> np.ndarray:
    return np.where(rng.integers(0, 2, size=shape) == 1, 1.0, -1.0)


def gen_s_hashing(spec: SketchSpec, n: int) -> HashSketch:
    """s distinct rows per column, each entry independently ``+-1/sqrt(s)``."""
    m, s = spec.m, spec.s
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got s={s}, m={m}")
    rows = _distinct_rows(stream(spec.seed, "hash", "rows"), m, s, n)
    vals = _signs(stream(spec.seed, "hash", "signs"), (n, s)) / np.sqrt(s)
    return _from_draws(m, n, rows, vals)


def gen_s_hashing_variant(spec: SketchSpec, n: int) -> HashSketch:
    """s row draws with replacement per column; coincident draws accumulate."""
    m, s = spec.m, spec.s
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got s={s}, m={m}")
    rows = stream(spec.seed, "variant", "rows").integers(0, m, size=(n, s))
    vals = _signs(stream(spec.seed, "variant", "signs"), (n, s)) / np.sqrt(s)
    return _from_draws(m, n, rows, vals)


def gen_variant_via_sum(spec: SketchSpec, n: int) -> HashSketch:
    """Scaled sum of s independent 1-hashing matrices.

    Equal in distribution to :func:`gen_s_hashing_variant`; kept as an
    independent construction for cross-checking it.
    """
    m, s = spec.m, spec.s
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= s <= m, got s={s}, m={m}")
    rows = np.empty((n, s), dtype=np.int64)
    vals = np.empty((n, s))
    for k in range(s):
        one = gen_s_hashing(SketchSpec("s_hashing", m, 1, derive_seed(spec.seed, "sum", k)), n)
        rows[:, k] = one.rows
        vals[:, k] = one.vals
    return _from_draws(m, n, rows, vals / np.sqrt(s))


@dataclass(frozen=True, eq=False)
class SamplingSketch(_Sketch):
    """Row selection ``X[idx]`` with unit weights."""

    m: int
    n: int
    idx: np.ndarray

    def apply(self, X) -> np.ndarray:
        _check_rows(self.n, X)
        return _dense_result(X[self.idx])


def gen_sampling(spec: SketchSpec, n: int) -> SamplingSketch:
    idx = stream(spec.seed, "sampling").integers(0, n, size=spec.m)
    return SamplingSketch(spec.m, n, idx)


@dataclass(frozen=True, eq=False)
class GaussianSketch(_Sketch):
    m: int
    n: int
    G: np.ndarray

    def apply(self, X) -> np.ndarray:
        _check_rows(self.n, X)
        if sp.issparse(X):
            return _dense_result((X.T @ self.G.T).T)
        return self.G @ np.asarray(X, dtype=np.float64)


def gen_gaussian(spec: SketchSpec, n: int) -> GaussianSketch:
    """Entries i.i.d. normal with variance ``1/m``."""
    G = stream(spec.seed, "gaussian").standard_normal((spec.m, n)) / np.sqrt(spec.m)
    return GaussianSketch(spec.m, n, G)


# ---------------------------------------------------------------------------
# fast orthogonal transforms


def _check_pow2(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise ValueError(f"transform length must be a power of two, got {n}")


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fwht(x) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform along axis 0 (natural order)."""
    x = np.array(x, dtype=np.float64)
    n = x.shape[0]
    _check_pow2(n)
    tail = x.shape[1:]
    h = 1
    while h < n:
        y = x.reshape((n // (2 * h), 2, h) + tail)
        a = y[:, 0].copy()
        y[:, 0] += y[:, 1]
        y[:, 1] = a - y[:, 1]
        h *= 2
    return x / np.sqrt(n)


def fdht(x) -> np.ndarray:
    """Orthonormal discrete Hartley transform along axis 0.

    Uses ``cas`` = real part minus imaginary part of the forward FFT.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    _check_pow2(n)
    X = np.fft.rfft(x, axis=0)
    half = X.shape[0]
    out = np.empty_like(x)
    out[:half] = X.real - X.imag
    # X[n-k] = conj(X[k]) for real input
    if n > 1:
        mirror = X[1 : n - half + 1][::-1]
        out[half:] = mirror.real + mirror.imag
    return out / np.sqrt(n)


_TRANSFORMS = {"wht": fwht, "dht": fdht}


@dataclass(frozen=True, eq=False)
class TransformSketch(_Sketch):
    """``downstream @ F @ D`` with zero padding of the input to ``n_pad`` rows."""

    m: int
    n: int
    n_pad: int
    signs: np.ndarray
    transform: str
    downstream: HashSketch | SamplingSketch

    def apply(self, X) -> np.ndarray:
        _check_rows(self.n, X)
        if sp.issparse(X):
            X = X.toarray()
        X = np.asarray(X, dtype=np.float64)
        padded = np.zeros((self.n_pad,) + X.shape[1:])
        padded[: self.n] = X * (self.signs if X.ndim == 1 else self.signs[:, None])
        return self.downstream.apply(_TRANSFORMS[self.transform](padded))


def gen_transform(spec: SketchSpec, n: int) -> TransformSketch:
    n_pad = next_pow2(n)
    signs = _signs(stream(spec.seed, "transform", "signs"), n)
    child_seed = derive_seed(spec.seed, "transform", "downstream")
    if spec.kind == "sr_dht":
        downstream = gen_sampling(SketchSpec("sampling", spec.m, 1, child_seed), n_pad)
    else:
        downstream = gen_s_hashing(SketchSpec("s_hashing", spec.m, spec.s, child_seed), n_pad)
    transform = "wht" if spec.kind == "hrht" else "dht"
    return TransformSketch(spec.m, n, n_pad, signs, transform, downstream)


_GENERATORS = {
    "s_hashing": gen_s_hashing,
    "s_hashing_variant": gen_s_hashing_variant,
    "gaussian": gen_gaussian,
    "sampling": gen_sampling,
    "hr_dht": gen_transform,
    "sr_dht": gen_transform,
    "hrht": gen_transform,
}


def realize(spec: SketchSpec, n: int):
    """Draw the sketch described by ``spec`` for inputs with ``n`` rows."""
    if n < 1:
        raise ValueError("input must have at least one row")
    return _GENERATORS[spec.kind](spec, n)


def apply_sketch(sketch, X) -> np.ndarray:
    """Apply a realized sketch, or a spec realized on the fly, to ``X``."""
    if isinstance(sketch, SketchSpec):
        sketch = realize(sketch, X.shape[0])
    return sketch.apply(X)
