"""Benchmark harness: suite runs, failure judging and performance profiles.

A solver fails on a problem when its residual is neither relatively nor
absolutely close to the best residual any solver reached, or when it runs
past the time budget. Failed runs are charged :data:`FAIL_TIME` seconds.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .rng import derive_seed
from .solver import SolverConfig, solve, svd_lstsq
from .testgen import ProblemSpec, rhs_ones

FAIL_TIME = 9999.0
DEFAULT_BUDGET_S = 800.0
STATUSES = ("ok", "inaccurate", "timeout", "error")
RECORD_FIELDS = ("problem", "solver", "n", "d", "nnz", "time_s", "residual", "iters", "rank", "status")
PROFILE_FIELDS = ("solver", "log2_ratio", "fraction")
# oracle residuals are only computed up to this size
ORACLE_MAX_DIM = 2000


@dataclass(frozen=True)
class BenchRecord:
    problem: str
    solver: str
    n: int
    d: int
    nnz: int
    time_s: float
    residual: float
    iters: int
    rank: int
    status: str = "ok"
    oracle_residual: float | None = None

    @property
    def effective_time(self) -> float:
        return self.time_s if self.status == "ok" else FAIL_TIME


@dataclass(frozen=True)
class ProfileCurve:
    solver: str
    points: tuple[tuple[float, float], ...]

    def fraction_at(self, log2_ratio: float) -> float:
        frac = 0.0
        for a, b in self.points:
            if a <= log2_ratio:
                frac = b
        return frac


# ---------------------------------------------------------------------------
# solver configurations compared by the harness

SOLVERS = {
    "ski_dense": lambda seed: SolverConfig.dense_defaults(seed=seed),
    "ski_sparse": lambda seed: SolverConfig.sparse_defaults(seed=seed),
    # Blendenpik analogue: subsampled randomized DHT with m = 2.2d
    "sr_dht": lambda seed: SolverConfig(sketch="sr_dht", m_ratio=2.2, seed=seed),
    # LSRN analogue: Gaussian sketch with m = 1.1d and minimal-norm factorization
    "gaussian": lambda seed: SolverConfig(sketch="gaussian", m_ratio=1.1, min_norm=True, seed=seed),
    "ski_sparse_s1": lambda seed: SolverConfig.sparse_defaults(s=1, seed=seed),
    "direct_svd": None,
}


def solver_config(name: str, seed: int) -> SolverConfig | None:
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {name!r}; expected one of {sorted(SOLVERS)}")
    make = SOLVERS[name]
    return None if make is None else make(seed)


# ---------------------------------------------------------------------------
# judging and profiles


def judge(
    records,
    tau_r: float = 1e-6,
    tau_a: float = 1e-8,
    budget_s: float = DEFAULT_BUDGET_S,
) -> list[BenchRecord]:
    """Assign statuses to the records of one problem."""
    records = list(records)
    if not records:
        raise ValueError("cannot judge an empty record set")
    finite = [r.residual for r in records if r.status != "error" and math.isfinite(r.residual)]
    best = min(finite) if finite else math.inf
    out = []
    for rec in records:
        if rec.status == "error" or not math.isfinite(rec.residual):
            status = "error"
        elif rec.residual > (1 + tau_r) * best and rec.residual > best + tau_a:
            status = "inaccurate"
        elif rec.time_s > budget_s:
            status = "timeout"
        else:
            status = "ok"
        out.append(replace(rec, status=status))
    return out


def judge_all(records, tau_r=1e-6, tau_a=1e-8, budget_s=DEFAULT_BUDGET_S) -> list[BenchRecord]:
    by_problem: dict[str, list[BenchRecord]] = {}
    for rec in records:
        by_problem.setdefault(rec.problem, []).append(rec)
    judged = {}
    for prob, recs in by_problem.items():
        for rec in judge(recs, tau_r, tau_a, budget_s):
            judged[(rec.problem, rec.solver)] = rec
    return [judged[(r.problem, r.solver)] for r in records]


def _time_table(records) -> tuple[list[str], list[str], np.ndarray]:
    problems = sorted({r.problem for r in records})
    solvers = sorted({r.solver for r in records})
    T = np.full((len(problems), len(solvers)), np.nan)
    pi = {p: i for i, p in enumerate(problems)}
    si = {s: j for j, s in enumerate(solvers)}
    for r in records:
        T[pi[r.problem], si[r.solver]] = r.effective_time
    if np.isnan(T).any():
        i, j = map(int, np.argwhere(np.isnan(T))[0])
        raise ValueError(f"missing record for problem {problems[i]!r}, solver {solvers[j]!r}")
    return problems, solvers, T


def profile(records) -> dict[str, ProfileCurve]:
    """Dolan-More performance profile of every solver on a log2 ratio grid.

    The grid holds every ratio at which some curve steps, so each curve is
    represented exactly.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot profile an empty record set")
    _, solvers, T = _time_table(records)
    best = T.min(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(best > 0, T / best, np.where(T > 0, np.inf, 1.0))
    log2r = np.log2(ratios)
    grid = np.unique(np.concatenate(([0.0], log2r[np.isfinite(log2r)].ravel())))
    nprob = T.shape[0]
    curves = {}
    for j, name in enumerate(solvers):
        col = np.sort(log2r[:, j])
        counts = np.searchsorted(col, grid, side="right")
        curves[name] = ProfileCurve(
            name, tuple((float(a), float(c) / nprob) for a, c in zip(grid, counts))
        )
    return curves


# ---------------------------------------------------------------------------
# suite runs


def _run_one(A, b, name: str, cfg, problem: str, oracle: float | None) -> BenchRecord:
    n, d = A.shape
    t0 = time.perf_counter()
    try:
        if cfg is None:
            x, residual = svd_lstsq(A, b, 1e-12)
            iters, rank = 0, kernels.svd_compact(A, 1e-12).rank
        else:
            res = solve(A, b, cfg)
            residual, iters, rank = res.residual, res.iterations, res.rank
        status = "ok"
    except (kernels.NumericalError, ValueError, np.linalg.LinAlgError):
        residual, iters, rank, status = math.nan, 0, 0, "error"
    elapsed = time.perf_counter() - t0
    return BenchRecord(
        problem, name, n, d, kernels.nnz(A), elapsed, residual, iters, rank, status, oracle
    )


def _run_problem(args) -> list[BenchRecord]:
    index, problem, solvers, master_seed, oracle = args
    A = problem.build()
    b = rhs_ones(A.shape[0])
    ref = None
    if oracle and min(A.shape) <= ORACLE_MAX_DIM:
        ref = svd_lstsq(A, b, 1e-12)[1]
    out = []
    for name in solvers:
        cfg = solver_config(name, derive_seed(master_seed, "sketch", index, name))
        out.append(_run_one(A, b, name, cfg, problem.name, ref))
    return out


def make_suite(families, n: int, d: int, count: int, master_seed: int = 0) -> list[ProblemSpec]:
    """``count`` seeded instances of each family; seeds derive from the master seed."""
    suite = []
    for family in families:
        for k in range(count):
            seed = derive_seed(master_seed, "problem", family, k)
            suite.append(ProblemSpec(family, n, d, seed))
    return suite


def run_suite(
    problems,
    solvers,
    master_seed: int = 0,
    budget_s: float = DEFAULT_BUDGET_S,
    tau_r: float = 1e-6,
    tau_a: float = 1e-8,
    jobs: int = 1,
    oracle: bool = True,
) -> list[BenchRecord]:
    """Run every solver on every problem with ``b = ones`` and judge the results.

    Individual solver failures are recorded with status ``error``. Records
    come back ordered by (problem index, solver order).
    """
    problems = list(problems)
    solvers = list(solvers)
    if not problems:
        raise ValueError("suite is empty")
    for name in solvers:
        solver_config(name, 0)
    tasks = [(i, p, solvers, master_seed, oracle) for i, p in enumerate(problems)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_problem, tasks))
    else:
        chunks = [_run_problem(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    return judge_all(records, tau_r, tau_a, budget_s)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(fh, records, with_oracle: bool = False) -> None:
    fields = RECORD_FIELDS + (("oracle_residual",) if with_oracle else ())
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(fields)
    for r in records:
        row = [_fmt(getattr(r, f)) for f in RECORD_FIELDS]
        if with_oracle:
            row.append("" if r.oracle_residual is None else repr(r.oracle_residual))
        w.writerow(row)


def read_records(fh) -> list[BenchRecord]:
    out = []
    for row in csv.DictReader(fh):
        missing = [f for f in RECORD_FIELDS if f not in row]
        if missing:
            raise ValueError(f"bench CSV lacks columns {missing}")
        oracle = row.get("oracle_residual") or None
        out.append(
            BenchRecord(
                problem=row["problem"],
                solver=row["solver"],
                n=int(row["n"]),
                d=int(row["d"]),
                nnz=int(row["nnz"]),
                time_s=float(row["time_s"]),
                residual=float(row["residual"]),
                iters=int(row["iters"]),
                rank=int(row["rank"]),
                status=row["status"],
                oracle_residual=None if oracle is None else float(oracle),
            )
        )
    return out


def write_profile(fh, curves: dict[str, ProfileCurve]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PROFILE_FIELDS)
    for name in sorted(curves):
        for a, b in curves[name].points:
            w.writerow([name, repr(a), repr(b)])
