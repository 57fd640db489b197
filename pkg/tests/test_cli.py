import csv
import io
import re
from contextlib import redirect_stdout

import numpy as np
import pytest

from sketchlls import bench, cli, mmio
from sketchlls.rng import derive_seed
from sketchlls.solver import SolverConfig, solve
from sketchlls.testgen import ProblemSpec, rhs_ones


def run(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(argv)
    return code, buf.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_is_thin_wrapper():
    code, out = run(["solve", "--family", "coherent_dense", "--n", "2000", "--d", "100", "--seed", "7"])
    assert code == 0
    (row,) = rows(out)
    A = ProblemSpec("coherent_dense", 2000, 100, derive_seed(7, "problem")).build()
    cfg = SolverConfig.dense_defaults(seed=derive_seed(7, "sketch"))
    res = solve(A, rhs_ones(2000), cfg)
    assert float(row["residual"]) == res.residual
    assert int(row["iters"]) == res.iterations
    assert row["status"] == "ok"
    assert list(row)[:10] == list(bench.RECORD_FIELDS)


def test_gen_then_solve_min_norm(tmp_path):
    path = tmp_path / "a.mtx"
    code, _ = run(["gen", "--family", "identity_block", "--n", "100", "--d", "30", "--r", "20", "--out", str(path)])
    assert code == 0
    code, out = run(["solve", "--input", str(path), "--min-norm"])
    assert code == 0
    assert rows(out)[0]["rank"] == "20"


def test_gen_round_trip(tmp_path):
    path = tmp_path / "s.mtx"
    run(["gen", "--family", "semicoherent_sparse", "--n", "1000", "--d", "20", "--seed", "3", "--out", str(path)])
    A = ProblemSpec("semicoherent_sparse", 1000, 20, 3).build()
    assert (mmio.read_matrix_market(path) != A).nnz == 0


def test_profile_delegates(tmp_path):
    src = tmp_path / "bench.csv"
    recs = [
        bench.BenchRecord("p", "a", 4, 2, 8, 1.0, 1.0, 1, 2),
        bench.BenchRecord("p", "b", 4, 2, 8, 2.0, 1.0, 1, 2),
        bench.BenchRecord("q", "a", 4, 2, 8, 2.0, 1.0, 1, 2),
        bench.BenchRecord("q", "b", 4, 2, 8, 1.0, 1.0, 1, 2),
    ]
    with open(src, "w", newline="") as fh:
        bench.write_records(fh, recs)
    dst = tmp_path / "prof.csv"
    assert cli.main(["profile", "--in", str(src), "--out", str(dst)]) == 0
    assert dst.read_text().splitlines() == [
        "solver,log2_ratio,fraction",
        "a,0.0,0.5",
        "a,1.0,1.0",
        "b,0.0,0.5",
        "b,1.0,1.0",
    ]


def test_bench_and_analyze(tmp_path):
    out = tmp_path / "b.csv"
    code, _ = run(
        ["bench", "--family", "incoherent_dense", "--n", "300", "--d", "10", "--count", "2",
         "--solvers", "ski_dense,sr_dht", "--oracle", "--out", str(out)]
    )
    assert code == 0
    table = rows(out.read_text())
    assert len(table) == 4 and all(r["status"] == "ok" for r in table)
    assert "oracle_residual" in table[0]

    code, text = run(["analyze", "--family", "incoherent_dense", "--n", "300", "--d", "10", "--trials", "3"])
    assert code == 0
    table = rows(text)
    assert [r["trial"] for r in table] == ["0", "1", "2"]
    assert all(float(r["epsilon"]) >= 0 for r in table)


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--family", "coherent_dense", "--n", "50", "--d", "5", "--sketch", "gaussian", "--s", "3"],
        ["solve", "--family", "coherent_dense", "--n", "50"],
        ["solve", "--family", "identity_block", "--n", "50", "--d", "5"],
        ["solve", "--family", "coherent_dense", "--n", "50", "--d", "5", "--bogus"],
        ["solve", "--n", "50", "--d", "5"],
        ["bench", "--solvers", "ski_dense"],
        ["bench", "--family", "coherent_dense", "--solvers", "nope"],
    ],
    ids=["s-with-gaussian", "missing-d", "missing-r", "unknown-flag", "no-source", "empty-bench", "bad-solver"],
)
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2


def test_malformed_input_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 3 1.0\n")
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve", "--input", str(p)])
    assert exc.value.code == 2
    assert "line 3" in capsys.readouterr().err


def test_numeric_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "zero.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n5 2 0\n")
    assert cli.main(["solve", "--input", str(p)]) == 3


def test_not_converged_exit_code():
    code, out = run(
        ["solve", "--family", "incoherent_dense", "--n", "500", "--d", "40", "--sketch", "sampling",
         "--m-ratio", "1.0", "--it-max", "2"]
    )
    assert code == 3
    assert rows(out)[0]["status"] == "inaccurate"


def test_timeout_exit_code():
    code, out = run(["solve", "--family", "incoherent_dense", "--n", "300", "--d", "10", "--budget-s", "0"])
    assert code == 4
    assert rows(out)[0]["status"] == "timeout"


def test_sparse_override_selects_sparse_defaults():
    code, out = run(["solve", "--family", "incoherent_dense", "--n", "300", "--d", "10", "--sparse"])
    assert code == 0
    assert rows(out)[0]["solver"] == "s_hashing"


def test_help_defaults_golden():
    text = cli.build_parser()._subparsers._group_actions[0].choices["solve"].format_help()
    text = re.sub(r"\s+", " ", text)
    for fragment in [
        "(default 1.7 dense / 1.4 sparse)",
        "(default 1 dense / 2 sparse)",
        "(default 1e-8)",
        "(default 1e-6)",
        "(default 10000)",
        "(default 1e-12)",
        "(default 1e-10)",
        "(default 800)",
        "(default hr_dht dense / s_hashing sparse)",
    ]:
        assert fragment in text
    args = cli.build_parser().parse_args(["solve", "--family", "coherent_dense"])
    assert (args.tau_a, args.tau_r, args.it_max) == (1e-8, 1e-6, 10000)
    assert (args.rcond, args.rcond_thres, args.perturb, args.budget_s) == (1e-12, 1e-10, 1e-10, 800)
    assert cli.DENSE_DEFAULTS == {"sketch": "hr_dht", "m_ratio": 1.7, "s": 1}
    assert cli.SPARSE_DEFAULTS == {"sketch": "s_hashing", "m_ratio": 1.4, "s": 2}


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "sketchlls", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "solve" in proc.stdout and "profile" in proc.stdout


def test_seed_changes_result():
    _, a = run(["solve", "--family", "incoherent_sparse", "--n", "2000", "--d", "20", "--seed", "1"])
    _, b = run(["solve", "--family", "incoherent_sparse", "--n", "2000", "--d", "20", "--seed", "2"])
    _, c = run(["solve", "--family", "incoherent_sparse", "--n", "2000", "--d", "20", "--seed", "1"])
    assert rows(a)[0]["residual"] == rows(c)[0]["residual"]
    assert rows(a)[0]["problem"] != rows(b)[0]["problem"]
    assert np.isfinite(float(rows(b)[0]["residual"]))
