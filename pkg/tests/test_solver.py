import math

import numpy as np
import pytest
import scipy.sparse as sp

from sketchlls import analysis, kernels
from sketchlls.kernels import RankZeroError
from sketchlls.sketch import SketchSpec, realize
from sketchlls.solver import (
    SolverConfig,
    apply_W,
    apply_Wt,
    effective_perturb,
    explicit_residual_check,
    lsqr_preconditioned,
    solve,
    svd_lstsq,
)
from sketchlls.testgen import gen_incoherent_dense, gen_incoherent_sparse, rhs_ones


def _factors(A, spec):
    SA = realize(spec, A.shape[0]).apply(A)
    return kernels.cpqr(SA)


def _materialized_W(A, f):
    return kernels.as_dense(A) @ f.v1() @ np.linalg.inv(f.r11)


class TestConfig:
    def test_defaults(self):
        cfg = SolverConfig()
        assert (cfg.sketch, cfg.m_ratio, cfg.s) == ("hr_dht", 1.7, 1)
        assert (cfg.tau_a, cfg.tau_r, cfg.it_max) == (1e-8, 1e-6, 10_000)
        assert (cfg.rcond, cfg.rcond_thres, cfg.perturb) == (1e-12, 1e-10, 1e-10)
        sparse = SolverConfig.sparse_defaults()
        assert (sparse.sketch, sparse.m_ratio, sparse.s) == ("s_hashing", 1.4, 2)

    def test_for_matrix(self):
        assert SolverConfig.for_matrix(np.eye(3)).sketch == "hr_dht"
        assert SolverConfig.for_matrix(sp.eye_array(3, format="csr")).sketch == "s_hashing"

    def test_sketch_rows(self):
        assert SolverConfig(m_ratio=1.7).sketch_rows(100) == 170
        assert SolverConfig(m_ratio=1.4).sketch_rows(10) == 14
        assert SolverConfig(m_ratio=1.1).sketch_rows(7) == 8

    @pytest.mark.parametrize(
        "bad", [{"m_ratio": 0.5}, {"tau_r": 0}, {"it_max": 0}, {"rcond": 1.5}, {"perturb": -1}]
    )
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


class TestOperator:
    def test_identity_factors(self, rng):
        A = rng.standard_normal((12, 4))
        f = kernels.CpqrFactors(np.eye(4), np.eye(4), np.zeros((4, 0)), np.arange(4))
        y = rng.standard_normal(4)
        assert np.allclose(apply_W(f, A, y), A @ y)

    def test_matches_materialized(self, rng):
        A = rng.standard_normal((50, 8))
        f = _factors(A, SketchSpec("gaussian", 20, seed=1))
        W = _materialized_W(A, f)
        y = rng.standard_normal(8)
        v = rng.standard_normal(50)
        assert np.max(np.abs(apply_W(f, A, y) - W @ y)) <= 1e-12 * np.abs(W).max() * 8
        assert np.max(np.abs(apply_Wt(f, A, v) - W.T @ v)) <= 1e-12 * np.abs(W).max() * 50

    def test_adjoint(self, rng):
        A = sp.random_array((60, 6), density=0.4, random_state=3, format="csr")
        f = kernels.complete_orthogonal(_factors(A, SketchSpec("s_hashing", 15, 2, seed=2)))
        y = rng.standard_normal(f.rank)
        v = rng.standard_normal(60)
        lhs = apply_W(f, A, y) @ v
        rhs = y @ apply_Wt(f, A, v)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_perturb_trigger(self):
        f = kernels.CpqrFactors(np.eye(2), np.diag([1.0, 1e-11]), np.zeros((2, 0)), np.arange(2))
        assert effective_perturb(f, 1e-10, 1e-10) == 1e-10
        g = kernels.CpqrFactors(np.eye(2), np.diag([1.0, 1e-3]), np.zeros((2, 0)), np.arange(2))
        assert effective_perturb(g, 1e-10, 1e-10) == 0.0


class TestLsqr:
    def test_orthonormal_converges_fast(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        f = kernels.CpqrFactors(np.eye(5), np.eye(5), np.zeros((5, 0)), np.arange(5))
        out = lsqr_preconditioned(Q, rng.standard_normal(40), f, 1e-6, 100)
        assert out.converged and out.iterations <= 2

    def test_matches_normal_equations(self, rng):
        A = rng.standard_normal((100, 10)) @ np.diag(np.logspace(0, 3, 10))
        b = rng.standard_normal(100)
        f = _factors(A, SketchSpec("gaussian", 30, seed=4))
        W = _materialized_W(A, f)
        ref = np.linalg.solve(W.T @ W, W.T @ b)
        out = lsqr_preconditioned(A, b, f, 1e-12, 200)
        assert np.linalg.norm(out.y - ref) <= 1e-8 * np.linalg.norm(ref)

    def test_iteration_bound(self):
        A = gen_incoherent_dense(2000, 40, 1)
        b = rhs_ones(2000)
        tau = 1e-6
        for seed in range(5):
            spec = SketchSpec("hr_dht", 480, 1, seed=seed)
            S = realize(spec, 2000)
            eps = analysis.embedding_distortion(S, A).epsilon
            assert eps <= 0.9
            out = lsqr_preconditioned(A, b, kernels.cpqr(S.apply(A)), tau, 1000)
            bound = math.ceil((math.log(2) + abs(math.log(tau))) / abs(math.log(eps))) + 2
            assert out.iterations <= bound

    def test_zero_rhs(self, rng):
        A = rng.standard_normal((20, 3))
        f = kernels.cpqr(A)
        out = lsqr_preconditioned(A, np.zeros(20), f)
        assert out.iterations == 0 and np.all(out.y == 0)

    def test_it_max_stops(self):
        A = gen_incoherent_dense(500, 30, 2)
        f = kernels.cpqr(A[:30])  # a deliberately poor preconditioner
        out = lsqr_preconditioned(A, rhs_ones(500), f, 1e-14, 3)
        assert out.iterations == 3 and not out.converged


class TestExplicitCheck:
    def test_exact(self, rng):
        A = rng.standard_normal((10, 3))
        x = rng.standard_normal(3)
        assert explicit_residual_check(A, A @ x, x, 1e-8)

    def test_orthogonal_rhs(self, rng):
        A = np.vstack([np.eye(3), np.zeros((3, 3))])
        b = np.concatenate([np.zeros(3), np.ones(3)])
        assert not explicit_residual_check(A, b, np.zeros(3), 1e-8)


class TestSolve:
    def test_consistent_system_takes_explicit_route(self, rng):
        A = gen_incoherent_dense(1000, 30, 3)
        x_true = rng.standard_normal(30)
        res = solve(A, A @ x_true, SolverConfig(seed=1, tau_a=1e-8 * np.linalg.norm(A @ x_true)))
        assert res.route == "explicit"
        assert res.iterations == 0
        assert res.residual <= 1e-8 * np.linalg.norm(A @ x_true)

    def test_incoherent_dense_matches_oracle(self):
        A = gen_incoherent_dense(2000, 100, 0)
        b = rhs_ones(2000)
        res = solve(A, b, SolverConfig.dense_defaults(seed=3))
        _, ref = svd_lstsq(A, b)
        assert res.converged and res.route == "iterative"
        assert abs(res.residual - ref) <= 1e-6 * ref

    def test_sparse_matches_oracle(self):
        A = gen_incoherent_sparse(3000, 60, 1)
        b = rhs_ones(3000)
        res = solve(A, b, SolverConfig.sparse_defaults(seed=2))
        _, ref = svd_lstsq(A, b)
        assert abs(res.residual - ref) <= 1e-6 * ref

    def test_min_norm_on_duplicated_columns(self, rng):
        B = rng.standard_normal((400, 12))
        A = np.hstack([B, B[:, :5]])
        b = rng.standard_normal(400)
        res = solve(A, b, SolverConfig(min_norm=True, tau_r=1e-12, seed=5))
        x_ref, _ = svd_lstsq(A, b)
        assert res.rank == 12
        assert np.linalg.norm(res.x - x_ref) <= 1e-6 * (1 + np.linalg.norm(x_ref))

    def test_tight_tolerance_reaches_optimum(self, rng):
        A = rng.standard_normal((300, 20)) @ np.diag(np.logspace(0, 4, 20))
        b = rng.standard_normal(300)
        res = solve(A, b, SolverConfig(tau_r=1e-12, seed=6))
        _, ref = svd_lstsq(A, b)
        assert abs(res.residual - ref) <= 1e-8

    def test_explicit_route_when_optimum_small(self, rng):
        A = gen_incoherent_dense(1500, 20, 4)
        b = A @ rng.standard_normal(20) + 1e-14 * rng.standard_normal(1500)
        cfg = SolverConfig(sketch="gaussian", m_ratio=30, seed=7, tau_a=1e-6)
        eps = analysis.embedding_distortion(cfg.sketch_spec(20), A).epsilon
        _, opt = svd_lstsq(A, b)
        assert eps < 1 and opt <= cfg.tau_a * (1 - eps) / (1 + eps)
        assert solve(A, b, cfg).route == "explicit"

    def test_deterministic(self):
        A = gen_incoherent_sparse(2000, 30, 4)
        b = rhs_ones(2000)
        cfg = SolverConfig.sparse_defaults(seed=11)
        r1, r2 = solve(A, b, cfg), solve(A, b, cfg)
        assert np.array_equal(r1.x, r2.x)
        assert (r1.residual, r1.iterations, r1.rank) == (r2.residual, r2.iterations, r2.rank)

    def test_records_stage_times(self):
        res = solve(gen_incoherent_dense(300, 10, 0), rhs_ones(300))
        assert set(res.times) == {"sketch", "factorize", "explicit", "lsqr"}
        assert res.total_time >= 0

    def test_not_converged_flag(self):
        A = gen_incoherent_dense(500, 40, 0)
        res = solve(A, rhs_ones(500), SolverConfig(sketch="sampling", m_ratio=1.0, it_max=2, seed=1))
        assert res.iterations <= 2
        assert not res.converged

    def test_zero_matrix(self):
        with pytest.raises(RankZeroError):
            solve(np.zeros((10, 3)), np.ones(10))

    @pytest.mark.parametrize(
        "A,b",
        [
            (np.ones((3, 5)), np.ones(3)),
            (np.ones((5, 2)), np.ones(4)),
            (np.ones((5, 2)), np.array([1, 1, np.nan, 1, 1.0])),
        ],
    )
    def test_bad_inputs(self, A, b):
        with pytest.raises(ValueError):
            solve(A, b)
