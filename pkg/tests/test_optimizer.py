import dataclasses

import numpy as np
import pytest

from rsgd_lab.errors import DivergedError, InvalidArgumentError
from rsgd_lab.manifold import Manifold
from rsgd_lab.optimizer import (
    RsgdConfig,
    descent_trace,
    estimate_smoothness,
    rsgd_step,
    run,
    sample_batch,
)
from rsgd_lab.problems import PcaProblem
from rsgd_lab.schedule import BatchSchedule, LrSchedule, bs_at, lr_at


def config(T=40, eta=0.05, bs=None, **kw):
    return RsgdConfig(T=T, lr=LrSchedule("constant", eta_max=eta),
                      bs=bs or BatchSchedule("bs_constant", b0=3), **kw)


def stripped(rows):
    return [dataclasses.replace(row, wall_ms=0.0) for row in rows]


def test_sample_batch_is_uniform_with_replacement():
    rng = np.random.default_rng(0)
    idx = sample_batch(rng, 10, 100_000)
    assert idx.shape == (100_000,)
    counts = np.bincount(idx, minlength=10)
    assert counts.size == 10
    assert np.all(np.abs(counts - 10_000) < 500)
    assert len(set(sample_batch(rng, 2, 50).tolist())) == 2


@pytest.mark.parametrize("N,b", [(0, 1), (5, 0)])
def test_sample_batch_arguments(N, b):
    with pytest.raises(InvalidArgumentError):
        sample_batch(np.random.default_rng(0), N, b)


def test_zero_step_keeps_the_point(pca_problem, rng):
    x = pca_problem.manifold.random_point(rng)
    y = rsgd_step(pca_problem, x, [0, 1, 2], 0.0)
    assert np.max(np.abs(y - x)) <= 1e-14
    with pytest.raises(InvalidArgumentError):
        rsgd_step(pca_problem, x, [0], -0.1)


def test_step_stays_on_the_manifold(lrmc_problem, rng):
    x = lrmc_problem.manifold.random_point(rng)
    for _ in range(50):
        x = rsgd_step(lrmc_problem, x, sample_batch(rng, lrmc_problem.n_samples, 4), 0.1)
    assert lrmc_problem.manifold.is_point(x)


class TestRun:

    def test_telemetry_schedule(self, pca_problem):
        cfg = config(T=23, eval_period=5, bs=BatchSchedule("bs_exp", b0=2, gamma=2.0, K=6))
        record = run(pca_problem, cfg, label="smoke")
        assert [r.iter for r in record.rows] == [0, 5, 10, 15, 20, 22]
        for row in record.rows:
            assert row.batch_size == bs_at(cfg.bs, row.iter)
            assert row.lr == lr_at(cfg.lr, row.iter, cfg.T)
            assert row.sfo_cum == int(np.sum(cfg.bs.values(cfg.T)[:row.iter]))
        assert record.rows[0].sfo_cum == 0
        assert record.total_sfo == cfg.bs.total_sfo(cfg.T)
        assert record.min_grad_norm_sq == pytest.approx(min(r.grad_norm ** 2 for r in record.rows))
        assert record.label == "smoke" and record.seed == 0
        assert record.final_loss == record.rows[-1].loss
        assert pca_problem.manifold.is_point(record.final_point)

    def test_single_iteration(self, pca_problem):
        record = run(pca_problem, config(T=1, eval_period=1))
        assert [r.iter for r in record.rows] == [0]
        assert record.total_sfo == 3

    def test_sfo_count_is_exact_for_geometric_batches(self):
        params = np.random.default_rng(99)
        problem = PcaProblem(np.random.default_rng(5).standard_normal((10, 4)), 1)
        for _ in range(20):
            b0 = int(params.integers(1, 6))
            gamma = int(params.integers(2, 4))
            K = int(params.integers(1, 6))
            M = int(params.integers(1, 5))
            bs = BatchSchedule("bs_exp", b0=b0, gamma=float(gamma), K=K)
            record = run(problem, config(T=M * K, eval_period=M * K, bs=bs, seed=int(params.integers(100))))
            assert record.total_sfo == b0 * K * (gamma ** M - 1) // (gamma - 1)
            assert record.rows[-1].sfo_cum == record.total_sfo - bs_at(bs, M * K - 1)

    def test_same_seed_same_trajectory(self, lrmc_problem):
        a = run(lrmc_problem, config(seed=7))
        b = run(lrmc_problem, config(seed=7))
        assert stripped(a.rows) == stripped(b.rows)
        np.testing.assert_array_equal(a.final_point, b.final_point)
        c = run(lrmc_problem, config(seed=8))
        assert not np.array_equal(a.final_point, c.final_point)

    def test_explicit_initial_point(self, pca_problem, rng):
        x0 = pca_problem.manifold.random_point(rng)
        record = run(pca_problem, config(T=5, init=x0, eval_period=5))
        assert record.rows[0].loss == pytest.approx(pca_problem.loss(x0))

    def test_manifold_mismatch(self, pca_problem):
        with pytest.raises(InvalidArgumentError):
            run(pca_problem, config(manifold=Manifold.grassmann(8, 3)))

    @pytest.mark.parametrize("kw", [dict(T=0), dict(T=10, eval_period=11), dict(T=10, seed=-1)])
    def test_invalid_settings(self, pca_problem, kw):
        with pytest.raises(InvalidArgumentError):
            run(pca_problem, config(**kw))

    def test_warmup_longer_than_run(self, pca_problem):
        lr = LrSchedule("warmup_exp", eta0=0.01, delta=1.5, k_prime=10, l_w=3)
        cfg = RsgdConfig(T=20, lr=lr, bs=BatchSchedule("bs_constant", b0=2))
        with pytest.raises(InvalidArgumentError):
            run(pca_problem, cfg)

    def test_non_finite_objective_diverges(self):
        problem = PcaProblem(np.full((3, 2), np.inf), 1)
        with pytest.raises(DivergedError) as err:
            run(problem, config(T=5), label="bad")
        assert err.value.iteration == 0
        assert err.value.label == "bad"


def test_stationary_point_is_fixed():
    X = np.array([[2.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
    problem = PcaProblem(X, 2)
    U = np.eye(4)[:, :2]
    assert problem.manifold.norm(U, problem.rgrad(U)) <= 1e-12
    np.testing.assert_allclose(rsgd_step(problem, U, None, 0.1), U, atol=1e-12, rtol=0)


def test_step_matches_project_then_qr(pca_problem, rng):
    U = pca_problem.manifold.random_point(rng)
    batch, eta = [0, 3, 3], 0.05
    xs = pca_problem.X[batch]
    G = -2.0 / len(batch) * xs.T @ (xs @ U)
    xi = G - U @ (U.T @ G + G.T @ U) / 2
    Q, R = np.linalg.qr(U - eta * xi)
    expected = Q * np.sign(np.diag(R))
    np.testing.assert_allclose(rsgd_step(pca_problem, U, batch, eta), expected, atol=1e-12, rtol=0)


def cap_start(problem, rng):
    w = np.zeros((problem.X.shape[1], 1))
    w[0] = 1.0
    return w


def random_start(problem, rng):
    return problem.manifold.random_point(rng)


@pytest.mark.parametrize("fixture,start", [
    ("pca_problem", random_start),
    ("lrmc_problem", random_start),
    # sqrt-abs is smooth only away from the great circles <x_j, w> = 0; start at the
    # sample cluster so full-batch steps stay on one side of every circle
    ("cap_problem", cap_start),
])
def test_full_batch_descent(fixture, start, request, rng):
    problem = request.getfixturevalue(fixture)
    L_hat = estimate_smoothness(problem, rng, samples=1000)
    assert 0 < L_hat < np.inf
    # L_hat is a sampled maximum and sits below the true constant
    eta = 0.5 / L_hat
    assert eta < 2.0 / L_hat
    losses = descent_trace(problem, start(problem, rng), eta, 200)
    assert losses.shape == (201,)
    assert np.all(np.diff(losses) <= 1e-10)
    assert losses[-1] < losses[0]
