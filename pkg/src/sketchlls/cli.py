"""Command-line interface: ``solve``, ``analyze``, ``gen``, ``bench``, ``profile``.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 time budget
exceeded.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from contextlib import contextmanager

import numpy as np

from . import analysis, bench, kernels, mmio
from .rng import derive_seed
from .sketch import KINDS, USES_S, SketchSpec
from .solver import SolverConfig, solve
from .testgen import FAMILIES, ProblemSpec, rhs_ones

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_TIMEOUT = 0, 2, 3, 4

DENSE_DEFAULTS = {"sketch": "hr_dht", "m_ratio": 1.7, "s": 1}
SPARSE_DEFAULTS = {"sketch": "s_hashing", "m_ratio": 1.4, "s": 2}


class UsageError(Exception):
    pass


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="MTX", help="Matrix Market file (transposed if n < d)")
    src.add_argument("--family", choices=[f for f in FAMILIES if f != "from_file"])
    p.add_argument("--n", type=int, help="rows of a generated matrix")
    p.add_argument("--d", type=int, help="columns of a generated matrix")
    p.add_argument("--r", type=int, help="rank of an identity_block matrix")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--dense", dest="mode", action="store_const", const="dense",
                      help="treat the input as dense regardless of storage")
    mode.add_argument("--sparse", dest="mode", action="store_const", const="sparse",
                      help="treat the input as sparse regardless of storage")


def _add_sketch_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sketch", choices=KINDS,
                   help="sketch distribution (default hr_dht dense / s_hashing sparse)")
    p.add_argument("--m-ratio", type=float,
                   help="sketch rows per column, m = ceil(ratio*d) (default 1.7 dense / 1.4 sparse)")
    p.add_argument("--s", type=int,
                   help="nonzeros per sketch column (default 1 dense / 2 sparse)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau-a", type=float, default=1e-8, help="absolute residual tolerance (default 1e-8)")
    p.add_argument("--tau-r", type=float, default=1e-6, help="relative LSQR tolerance (default 1e-6)")
    p.add_argument("--it-max", type=int, default=10000, help="maximum LSQR iterations (default 10000)")
    p.add_argument("--rcond", type=float, default=1e-12, help="rank truncation threshold (default 1e-12)")
    p.add_argument("--rcond-thres", type=float, default=1e-10,
                   help="perturbed back-solve trigger (default 1e-10)")
    p.add_argument("--perturb", type=float, default=1e-10, help="diagonal perturbation (default 1e-10)")
    p.add_argument("--min-norm", action="store_true", help="use a complete orthogonal factorization")
    p.add_argument("--warm-start", action="store_true", help="start LSQR from Q^T S b instead of 0")
    p.add_argument("--budget-s", type=float, default=bench.DEFAULT_BUDGET_S,
                   help="time budget in seconds (default 800)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchlls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one least-squares problem with b = ones")
    _add_problem_args(p)
    _add_sketch_args(p)
    _add_solver_args(p)
    p.add_argument("--out", help="CSV output path (default stdout)")

    p = sub.add_parser("analyze", help="embedding diagnostics for repeated sketches")
    _add_problem_args(p)
    _add_sketch_args(p)
    p.add_argument("--trials", type=int, default=1, help="number of independent sketches (default 1)")
    p.add_argument("--rcond", type=float, default=1e-12, help="rank truncation threshold (default 1e-12)")
    p.add_argument("--out", help="CSV output path (default stdout)")

    p = sub.add_parser("gen", help="write a generated test matrix as Matrix Market")
    p.add_argument("--family", required=True, choices=[f for f in FAMILIES if f != "from_file"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .mtx path")

    p = sub.add_parser("bench", help="run solver configurations over a problem suite")
    p.add_argument("--family", action="append", default=[], choices=[f for f in FAMILIES if f not in ("from_file", "identity_block")],
                   help="generated family (repeatable)")
    p.add_argument("--input", action="append", default=[], metavar="MTX", help="Matrix Market file (repeatable)")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--count", type=int, default=1, help="instances per family (default 1)")
    p.add_argument("--solvers", default="ski_dense,ski_sparse",
                   help=f"comma-separated subset of {','.join(bench.SOLVERS)}")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--budget-s", type=float, default=bench.DEFAULT_BUDGET_S, help="time budget (default 800)")
    p.add_argument("--tau-a", type=float, default=1e-8, help="absolute failure tolerance (default 1e-8)")
    p.add_argument("--tau-r", type=float, default=1e-6, help="relative failure tolerance (default 1e-6)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes (default 1)")
    p.add_argument("--oracle", action="store_true", help="add an SVD oracle residual column")
    p.add_argument("--out", help="CSV output path (default stdout)")

    p = sub.add_parser("profile", help="performance profiles from a bench CSV")
    p.add_argument("--in", dest="input", required=True, help="bench CSV")
    p.add_argument("--out", help="profile CSV path (default stdout)")
    return parser


# ---------------------------------------------------------------------------


def _load_problem(args) -> tuple[str, object]:
    if args.input:
        A = mmio.read_matrix_market(args.input)
        name = args.input
    else:
        if args.n is None or args.d is None:
            raise UsageError("--family requires --n and --d")
        if args.family == "identity_block" and args.r is None:
            raise UsageError("identity_block requires --r")
        spec = ProblemSpec(args.family, args.n, args.d, derive_seed(args.seed, "problem"), args.r)
        A, name = spec.build(), spec.name
    if args.mode == "dense":
        A = kernels.as_dense(A)
    elif args.mode == "sparse":
        A = kernels.as_csr(A)
    return name, A


def _sketch_choice(args, A) -> dict:
    base = SPARSE_DEFAULTS if kernels.is_sparse(A) else DENSE_DEFAULTS
    kind = args.sketch or base["sketch"]
    if args.s is not None and kind not in USES_S:
        raise UsageError(f"--s does not apply to the {kind} sketch")
    s = args.s if args.s is not None else (base["s"] if kind in USES_S else 1)
    m_ratio = args.m_ratio if args.m_ratio is not None else base["m_ratio"]
    return {"sketch": kind, "s": s, "m_ratio": m_ratio, "seed": derive_seed(args.seed, "sketch")}


def config_from_args(args, A) -> SolverConfig:
    return SolverConfig(
        **_sketch_choice(args, A),
        tau_a=args.tau_a,
        tau_r=args.tau_r,
        it_max=args.it_max,
        rcond=args.rcond,
        rcond_thres=args.rcond_thres,
        perturb=args.perturb,
        min_norm=args.min_norm,
        warm_start=args.warm_start,
    )


def _cmd_solve(args) -> int:
    name, A = _load_problem(args)
    try:
        cfg = config_from_args(args, A)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    n, d = A.shape
    t0 = time.perf_counter()
    try:
        res = solve(A, rhs_ones(n), cfg)
    except (kernels.NumericalError, np.linalg.LinAlgError) as exc:
        print(f"sketchlls: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    elapsed = time.perf_counter() - t0
    if elapsed > args.budget_s:
        status, code = "timeout", EXIT_TIMEOUT
    elif not res.converged:
        status, code = "inaccurate", EXIT_NUMERIC
    else:
        status, code = "ok", EXIT_OK
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(bench.RECORD_FIELDS + ("route",))
        w.writerow([name, cfg.sketch, n, d, kernels.nnz(A), repr(elapsed), repr(res.residual),
                    res.iterations, res.rank, status, res.route])
    return code


def _cmd_analyze(args) -> int:
    name, A = _load_problem(args)
    choice = _sketch_choice(args, A)
    n, d = A.shape
    m = SolverConfig(m_ratio=choice["m_ratio"]).sketch_rows(d)
    spec = SketchSpec(choice["sketch"], m, min(choice["s"], m), choice["seed"])
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    mu = analysis.coherence(A, args.rcond)
    reports = analysis.distortion_trials(spec, A, args.trials, args.rcond)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["problem", "sketch", "m", "s", "trial", "coherence", "sigma_min",
                    "sigma_max", "epsilon", "rank_preserved", "kappa_w"])
        for t, rep in enumerate(reports):
            trial_spec = spec.with_seed(derive_seed(spec.seed, "trial", t))
            kappa = _kappa_w(A, trial_spec, args.rcond)
            w.writerow([name, spec.kind, m, spec.s, t, repr(mu), repr(rep.sigma_min),
                        repr(rep.sigma_max), repr(rep.epsilon), int(rep.rank_preserved), repr(kappa)])
    return EXIT_OK


def _kappa_w(A, spec: SketchSpec, rcond: float) -> float:
    from .sketch import realize

    SA = realize(spec, A.shape[0]).apply(A)
    try:
        f = kernels.cpqr(SA, rcond)
    except kernels.RankZeroError:
        return float("inf")
    return analysis.precond_quality(A, f)


def _cmd_gen(args) -> int:
    if args.family == "identity_block" and args.r is None:
        raise UsageError("identity_block requires --r")
    try:
        spec = ProblemSpec(args.family, args.n, args.d, args.seed, args.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    mmio.write_matrix_market(args.out, spec.build(), comment=spec.name)
    return EXIT_OK


def _cmd_bench(args) -> int:
    problems = bench.make_suite(args.family, args.n, args.d, args.count, args.seed)
    problems += [ProblemSpec("from_file", path=p) for p in args.input]
    if not problems:
        raise UsageError("bench needs at least one --family or --input")
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    unknown = [s for s in solvers if s not in bench.SOLVERS]
    if unknown:
        raise UsageError(f"unknown solvers {unknown}; expected names from {sorted(bench.SOLVERS)}")
    records = bench.run_suite(problems, solvers, args.seed, args.budget_s, args.tau_r,
                              args.tau_a, args.jobs, oracle=args.oracle)
    with _output(args.out) as fh:
        bench.write_records(fh, records, with_oracle=args.oracle)
    if any(r.status == "timeout" for r in records):
        return EXIT_TIMEOUT
    if any(r.status == "error" for r in records):
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_profile(args) -> int:
    with open(args.input, newline="") as fh:
        records = bench.read_records(fh)
    try:
        curves = bench.profile(records)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with _output(args.out) as fh:
        bench.write_profile(fh, curves)
    return EXIT_OK


COMMANDS = {
    "solve": _cmd_solve,
    "analyze": _cmd_analyze,
    "gen": _cmd_gen,
    "bench": _cmd_bench,
    "profile": _cmd_profile,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, mmio.MatrixMarketError, FileNotFoundError) as exc:
        parser.error(str(exc))  # exits with status 2


if __name__ == "__main__":
    sys.exit(main())
