"""Embedding-quality diagnostics.

Distortion is measured exactly: a sketch ``S`` is an epsilon-subspace
embedding for ``A`` iff every singular value of ``S @ U`` lies in
``[sqrt(1 - eps), sqrt(1 + eps)]``, where ``U`` is the orthonormal left
factor of ``A``. No directions are sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import CpqrFactors
from .rng import derive_seed, stream
from .sketch import SketchSpec, fwht, realize


@dataclass(frozen=True)
class DistortionReport:
    sigma_min: float
    sigma_max: float
    epsilon: float
    rank_preserved: bool


def coherence(A, rank_tol: float = 1e-12) -> float:
    """Largest row norm of the orthonormal left singular factor of ``A``."""
    U = kernels.svd_compact(A, rank_tol).U
    if U.shape[1] == 0:
        raise ValueError("coherence of a zero matrix is undefined")
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", U, U))))


def leverage_scores(A, rank_tol: float = 1e-12) -> np.ndarray:
    U = kernels.svd_compact(A, rank_tol).U
    return np.einsum("ij,ij->i", U, U)


def non_uniformity(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ValueError("non-uniformity of the zero vector is undefined")
    return float(np.max(np.abs(x)) / norm)


def distortion_of(SU, zero_tol: float = 1e-12) -> DistortionReport:
    """Distortion report for an already-sketched orthonormal basis ``S @ U``.

    Singular values below ``zero_tol * max(1, sigma_max)`` count as exact
    zeros, i.e. lost rank.
    """
    SU = np.atleast_2d(np.asarray(SU, dtype=np.float64))
    m, r = SU.shape
    sig = np.linalg.svd(SU, compute_uv=False)
    smax = float(sig[0]) if sig.size else 0.0
    smin = float(sig[-1]) if m >= r else 0.0
    if smin <= zero_tol * max(1.0, smax):
        smin = 0.0
    eps = max(1.0 - smin**2, smax**2 - 1.0)
    return DistortionReport(smin, smax, eps, smin > 0.0)


def _left_basis(A, rank_tol: float) -> np.ndarray:
    U = kernels.svd_compact(A, rank_tol).U
    if U.shape[1] == 0:
        raise kernels.RankZeroError("matrix has numerical rank zero")
    return U


def _sketch_basis(S, U: np.ndarray) -> np.ndarray:
    if isinstance(S, SketchSpec):
        S = realize(S, U.shape[0])
    if isinstance(S, np.ndarray):
        return S @ U
    return S.apply(U)


def embedding_distortion(S, A, rank_tol: float = 1e-12) -> DistortionReport:
    """Exact subspace-embedding distortion of sketch ``S`` on ``range(A)``.

    ``S`` may be a realized sketch, a :class:`SketchSpec`, or an explicit
    dense matrix.
    """
    return distortion_of(_sketch_basis(S, _left_basis(A, rank_tol)))


def precond_quality(A, f: CpqrFactors, perturb: float = 0.0) -> float:
    """2-norm condition number of ``W = A V1 R11^{-1}``, materialized."""
    AV1 = kernels.as_dense(A @ f.v1()) if kernels.is_sparse(A) else kernels.as_dense(A) @ f.v1()
    W = kernels.tri_solve(f.r11, AV1.T, transpose=True, perturb=perturb).T
    sig = kernels.singular_values(W)
    if sig[-1] == 0.0:
        return float("inf")
    return float(sig[0] / sig[-1])


def distortion_trials(spec: SketchSpec, A, trials: int, rank_tol: float = 1e-12):
    """Distortion reports for ``trials`` independent sketches from ``spec``.

    Trial ``t`` uses the seed derived from ``(spec.seed, t)``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    U = _left_basis(A, rank_tol)
    reports = []
    for t in range(trials):
        trial_spec = spec.with_seed(derive_seed(spec.seed, "trial", t))
        reports.append(distortion_of(_sketch_basis(trial_spec, U)))
    return reports


def failure_rate(spec: SketchSpec, A, epsilon: float, trials: int) -> float:
    """Fraction of sketches whose distortion exceeds ``epsilon`` or that lose rank."""
    reports = distortion_trials(spec, A, trials)
    bad = sum(1 for r in reports if not r.rank_preserved or r.epsilon > epsilon)
    return bad / len(reports)


def coherence_bound(n: int, r: int, delta1: float) -> float:
    return float(np.sqrt(r / n) + np.sqrt(8.0 * np.log(n / delta1) / n))


def randomized_hadamard_coherence(U, seed: int) -> float:
    """Coherence of ``H D U`` for one random sign diagonal ``D``.

    ``H D`` is orthogonal, so ``H D U`` keeps orthonormal columns and its
    coherence is simply its largest row norm.
    """
    U = np.asarray(U, dtype=np.float64)
    signs = np.where(stream(seed, "hd").integers(0, 2, size=U.shape[0]) == 1, 1.0, -1.0)
    HDU = fwht(U * signs[:, None])
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", HDU, HDU))))


def coherence_reduction_check(
    n: int, U, delta1: float, trials: int, seed: int = 0
) -> float:
    """Fraction of random sign diagonals for which ``mu(HDU)`` meets the bound."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    U = np.asarray(U, dtype=np.float64)
    if U.shape[0] != n:
        raise ValueError("U must have n rows")
    bound = coherence_bound(n, U.shape[1], delta1)
    hits = sum(
        randomized_hadamard_coherence(U, derive_seed(seed, "trial", t)) <= bound
        for t in range(trials)
    )
    return hits / trials
