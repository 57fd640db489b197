"""Sketch-and-precondition least squares.

:func:`solve` draws a sketch ``S``, factors ``SA = Q1 [R11 R12] Vhat^T`` with
column-pivoted QR, returns the sketched solution when its residual is already
below ``tau_a`` and otherwise runs LSQR on ``min ||W y - b||`` with
``W = A V1 R11^{-1}`` applied implicitly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .kernels import CpqrFactors, RankZeroError
from .sketch import SketchSpec, realize

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SolverConfig:
    sketch: str = "hr_dht"
    m_ratio: float = 1.7
    s: int = 1
    seed: int = 0
    tau_a: float = 1e-8
    tau_r: float = 1e-6
    it_max: int = 10_000
    rcond: float = 1e-12
    rcond_thres: float = 1e-10
    perturb: float = 1e-10
    min_norm: bool = False
    warm_start: bool = False

    def __post_init__(self):
        if self.m_ratio < 1.0:
            raise ValueError("m_ratio must be at least 1")
        if self.tau_a <= 0 or self.tau_r <= 0:
            raise ValueError("tolerances must be positive")
        if self.it_max < 1:
            raise ValueError("it_max must be at least 1")
        if not 0.0 < self.rcond < 1.0:
            raise ValueError("rcond must lie in (0, 1)")
        if self.perturb < 0:
            raise ValueError("perturb must be nonnegative")

    @classmethod
    def dense_defaults(cls, **overrides) -> SolverConfig:
        return cls(**{"sketch": "hr_dht", "m_ratio": 1.7, "s": 1, **overrides})

    @classmethod
    def sparse_defaults(cls, **overrides) -> SolverConfig:
        return cls(**{"sketch": "s_hashing", "m_ratio": 1.4, "s": 2, **overrides})

    @classmethod
    def for_matrix(cls, A, **overrides) -> SolverConfig:
        if kernels.is_sparse(A):
            return cls.sparse_defaults(**overrides)
        return cls.dense_defaults(**overrides)

    def sketch_rows(self, d: int) -> int:
        return max(1, math.ceil(round(self.m_ratio * d, 9)))

    def sketch_spec(self, d: int) -> SketchSpec:
        m = self.sketch_rows(d)
        return SketchSpec(self.sketch, m, min(self.s, m), self.seed)

    def replace(self, **changes) -> SolverConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    residual: float
    iterations: int
    rank: int
    route: str
    converged: bool
    m: int
    times: dict = field(default_factory=dict)

    @property
    def total_time(self) -> float:
        return sum(self.times.values())


@dataclass(frozen=True)
class LsqrResult:
    y: np.ndarray
    iterations: int
    converged: bool
    residual_estimate: float
    w_norm_estimate: float


# ---------------------------------------------------------------------------
# preconditioned operator


def effective_perturb(f: CpqrFactors, rcond_thres: float, perturb: float) -> float:
    """``perturb`` if ``R11`` looks ill-conditioned, else 0."""
    if kernels.tri_cond_estimate(f.r11) >= 1.0 / rcond_thres:
        return perturb
    return 0.0


def apply_precond(f: CpqrFactors, y, perturb: float = 0.0) -> np.ndarray:
    """``V1 R11^{-1} y``."""
    return f.v1_apply(kernels.tri_solve(f.r11, y, perturb=perturb))


def apply_W(f: CpqrFactors, A, y, perturb: float = 0.0) -> np.ndarray:
    """``A V1 R11^{-1} y`` without forming ``W``."""
    return kernels.matvec(A, apply_precond(f, y, perturb))


def apply_Wt(f: CpqrFactors, A, v, perturb: float = 0.0) -> np.ndarray:
    """``R11^{-T} V1^T A^T v`` without forming ``W``."""
    z = f.v1t_apply(kernels.matvec(A, v, transpose=True))
    return kernels.tri_solve(f.r11, z, transpose=True, perturb=perturb)


def lsqr_preconditioned(
    A,
    b,
    f: CpqrFactors,
    tau_r: float = 1e-6,
    it_max: int = 10_000,
    y0=None,
    perturb: float = 0.0,
) -> LsqrResult:
    """Paige-Saunders LSQR for ``min ||W y - b||``, ``W = A V1 R11^{-1}``.

    Stops when ``||W^T r|| / (||W|| ||r||) <= tau_r`` with ``||W||`` the
    running Frobenius estimate from the bidiagonalization, when the residual
    is zero to machine precision, or after ``it_max`` iterations. A nonzero
    ``y0`` is handled by solving for the correction from ``b - W y0``.
    """
    b = np.asarray(b, dtype=np.float64)
    p = f.rank
    y = np.zeros(p) if y0 is None else np.array(y0, dtype=np.float64)

    def W(v):
        return apply_W(f, A, v, perturb)

    def Wt(u):
        return apply_Wt(f, A, u, perturb)

    u = b - W(y) if y0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    beta = np.linalg.norm(u)
    if beta > 0:
        u = u / beta
    v = Wt(u)
    alpha = np.linalg.norm(v)
    if alpha > 0:
        v = v / alpha
    if alpha * beta == 0.0:
        return LsqrResult(y, 0, True, beta, 0.0)

    w = v.copy()
    phibar, rhobar = beta, alpha
    anorm = 0.0
    ynorm_sq = 0.0
    rnorm = beta
    converged = False
    it = 0
    while it < it_max:
        it += 1
        u = W(v) - alpha * u
        beta = np.linalg.norm(u)
        if beta > 0:
            u /= beta
        anorm = math.sqrt(anorm**2 + alpha**2 + beta**2)
        v = Wt(u) - beta * v
        alpha = np.linalg.norm(v)
        if alpha > 0:
            v /= alpha

        rho = math.hypot(rhobar, beta)
        c, s = rhobar / rho, beta / rho
        theta = s * alpha
        rhobar = -c * alpha
        phi = c * phibar
        phibar = s * phibar

        y += (phi / rho) * w
        w = v - (theta / rho) * w

        rnorm = phibar
        arnorm = phibar * alpha * abs(c)
        ynorm_sq = float(y @ y)
        test2 = arnorm / (anorm * rnorm) if rnorm > 0 else 0.0
        # machine-precision floor for (nearly) compatible systems
        test1_floor = _EPS * (bnorm + anorm * math.sqrt(ynorm_sq))
        if test2 <= tau_r or rnorm <= test1_floor or 1.0 + test2 <= 1.0:
            converged = True
            break
    return LsqrResult(y, it, converged, rnorm, anorm)


# ---------------------------------------------------------------------------
# driver


def explicit_residual_check(A, b, x_s, tau_a: float) -> bool:
    return bool(np.linalg.norm(kernels.matvec(A, x_s) - b) <= tau_a)


def _residual(A, b, x) -> float:
    return float(np.linalg.norm(kernels.matvec(A, x) - b))


def solve(A, b, cfg: SolverConfig | None = None) -> SolveResult:
    """Solve ``min ||A x - b||_2`` by sketching and preconditioning.

    Raises :class:`~sketchlls.kernels.RankZeroError` if the sketch of ``A`` is
    numerically zero. If LSQR hits ``it_max`` the last iterate is returned
    with ``converged=False``.
    """
    A = kernels.as_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    n, d = A.shape
    if b.shape != (n,):
        raise ValueError(f"right-hand side must have shape ({n},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side has non-finite entries")
    if n < d:
        raise ValueError(f"expected an overdetermined problem, got {n} x {d}")
    if cfg is None:
        cfg = SolverConfig.for_matrix(A)

    times = {}
    t0 = time.perf_counter()
    spec = cfg.sketch_spec(d)
    S = realize(spec, n)
    SA = S.apply(A)
    Sb = S.apply(b)
    t1 = time.perf_counter()
    times["sketch"] = t1 - t0

    if not np.any(SA):
        raise RankZeroError("sketched matrix is zero")
    f = kernels.cpqr(SA, cfg.rcond)
    if cfg.min_norm:
        f = kernels.complete_orthogonal(f)
    perturb = effective_perturb(f, cfg.rcond_thres, cfg.perturb)
    t2 = time.perf_counter()
    times["factorize"] = t2 - t1

    z = f.q1.T @ Sb
    x_s = apply_precond(f, z, perturb)
    res_s = _residual(A, b, x_s)
    t3 = time.perf_counter()
    times["explicit"] = t3 - t2
    if res_s <= cfg.tau_a:
        times["lsqr"] = 0.0
        return SolveResult(x_s, res_s, 0, f.rank, "explicit", True, spec.m, times)

    out = lsqr_preconditioned(
        A, b, f, cfg.tau_r, cfg.it_max, y0=z if cfg.warm_start else None, perturb=perturb
    )
    x = apply_precond(f, out.y, perturb)
    times["lsqr"] = time.perf_counter() - t3
    return SolveResult(
        x, _residual(A, b, x), out.iterations, f.rank, "iterative", out.converged, spec.m, times
    )


def svd_lstsq(A, b, rank_tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Truncated-SVD minimal-norm least-squares solution and its residual."""
    F = kernels.svd_compact(A, rank_tol)
    b = np.asarray(b, dtype=np.float64)
    x = F.V @ ((F.U.T @ b) / F.sigma)
    return x, _residual(kernels.as_matrix(A), b, x)
