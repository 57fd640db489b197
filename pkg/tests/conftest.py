"""Shared test oracles.

Everything here is written from definitions with plain loops, independent
of the package code it checks.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

# lines collected by the acceptance module and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)


def naive_matmul(A, x):
    A = np.asarray(A)
    x = np.asarray(x)
    n, d = A.shape
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += A[i, j] * x[j]
        out[i] = acc
    return out


def jacobi_eigenvalues(M, sweeps: int = 100, tol: float = 1e-15):
    """Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations."""
    M = np.array(M, dtype=float)
    n = M.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(float(np.sum(M**2) - np.sum(np.diag(M) ** 2)))
        if off <= tol * max(1.0, float(np.linalg.norm(M))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if M[p, q] == 0.0:
                    continue
                theta = (M[q, q] - M[p, p]) / (2.0 * M[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                M = J.T @ M @ J
    return np.sort(np.diag(M))[::-1]


def hadamard_matrix(n: int) -> np.ndarray:
    """Orthonormal Walsh-Hadamard matrix from ``H_ij = (-1)^<i, j> / sqrt(n)``."""
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            H[i, j] = (-1) ** bin(i & j).count("1")
    return H / math.sqrt(n)


def hartley_matrix(n: int) -> np.ndarray:
    """Orthonormal DHT matrix ``F_ij = (cos + sin)(2 pi i j / n) / sqrt(n)``."""
    F = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            a = 2.0 * math.pi * i * j / n
            F[i, j] = math.cos(a) + math.sin(a)
    return F / math.sqrt(n)


def dolan_more_reference(times: dict, grid) -> dict:
    """Reference profile from the definition.

    ``times[problem][solver]`` holds effective times; returns per solver the
    fraction of problems with ``t <= 2**a * best`` for each ``a`` in ``grid``.
    """
    problems = list(times)
    solvers = sorted({s for row in times.values() for s in row})
    out = {}
    for s in solvers:
        fracs = []
        for a in grid:
            hits = 0
            for p in problems:
                best = min(times[p].values())
                if times[p][s] <= 2.0**a * best * (1 + 1e-12):
                    hits += 1
            fracs.append(hits / len(problems))
        out[s] = fracs
    return out


def principal_angle_sines(X, Y) -> np.ndarray:
    Qx, _ = np.linalg.qr(X)
    Qy, _ = np.linalg.qr(Y)
    # sines from the projection residual stay accurate for tiny angles
    return np.linalg.svd(Qy - Qx @ (Qx.T @ Qy), compute_uv=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
