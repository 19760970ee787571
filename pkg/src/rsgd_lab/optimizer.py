"""Riemannian stochastic gradient descent.

    x_{t+1} = R_{x_t}(-eta_t grad f_{B_t}(x_t))

with B_t a multiset of b_t indices drawn i.i.d. uniformly with replacement.
A run is a strictly sequential chain; distinct runs share nothing and may be
executed in parallel.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DivergedError, InvalidArgumentError
from .manifold import Manifold
from .schedule import BatchSchedule, LrSchedule

log = logging.getLogger(__name__)

__all__ = [
    "RsgdConfig",
    "TelemetryRow",
    "RunRecord",
    "sample_batch",
    "rsgd_step",
    "run",
    "estimate_smoothness",
    "descent_trace",
]


@dataclass
class RsgdConfig:
    """Settings of one RSGD run.

    ``init`` is an explicit starting point; ``None`` draws a random
    orthonormal one from the run's generator.
    """

    T: int
    lr: LrSchedule
    bs: BatchSchedule
    seed: int = 0
    eval_period: int = 10
    manifold: Optional[Manifold] = None
    init: Optional[np.ndarray] = None

    def validate(self):
        if int(self.T) != self.T or self.T < 1:
            raise InvalidArgumentError(f"T must be a positive integer, got {self.T}")
        if int(self.eval_period) != self.eval_period or not 1 <= self.eval_period <= self.T:
            raise InvalidArgumentError(
                f"eval_period must lie in [1, T={self.T}], got {self.eval_period}"
            )
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.lr.warmup_steps > self.T:
            raise InvalidArgumentError(
                f"warm-up length {self.lr.warmup_steps} exceeds T = {self.T}"
            )


@dataclass(frozen=True)
class TelemetryRow:
    iter: int
    batch_size: int
    lr: float
    sfo_cum: int
    grad_norm: float
    loss: float
    wall_ms: float = 0.0


@dataclass
class RunRecord:
    rows: List[TelemetryRow] = field(default_factory=list)
    final_point: Optional[np.ndarray] = None
    min_grad_norm_sq: float = math.inf
    total_sfo: int = 0
    label: str = ""
    seed: Optional[int] = None

    @property
    def final_loss(self):
        return self.rows[-1].loss if self.rows else math.nan


def sample_batch(rng, N, b):
    """Draws ``b`` indices of ``range(N)`` i.i.d. uniformly with replacement."""
    if N < 1:
        raise InvalidArgumentError(f"dataset size must be >= 1, got {N}")
    if b < 1:
        raise InvalidArgumentError(f"batch size must be >= 1, got {b}")
    return rng.integers(0, N, size=b)


def rsgd_step(problem, x, batch, eta):
    """One update R_x(-eta * grad f_B(x))."""
    if eta < 0:
        raise InvalidArgumentError(f"learning rate must be >= 0, got {eta}")
    g = problem.rgrad(x, batch)
    return problem.manifold.retract(x, -eta * g)


def _evaluation_iterations(T, period):
    marks = set(range(0, T, period))
    marks.add(T - 1)
    return marks


def run(problem, cfg, label=None):
    """Runs T iterations of RSGD and records full-objective telemetry.

    Telemetry rows are taken at t = 0, every ``eval_period`` iterations and
    at t = T - 1; each row describes the iterate x_t before its update, and
    ``sfo_cum`` counts the stochastic gradients spent to reach it.
    """
    cfg.validate()
    manifold = problem.manifold
    if cfg.manifold is not None and cfg.manifold != manifold:
        raise InvalidArgumentError(f"config manifold {cfg.manifold} != problem manifold {manifold}")
    label = label or ""
    N = problem.n_samples
    T = int(cfg.T)
    rng = np.random.default_rng(int(cfg.seed))
    if cfg.init is None:
        x = manifold.random_point(rng)
    else:
        x = manifold.check_point(cfg.init)

    etas = cfg.lr.values(T)
    sizes = cfg.bs.values(T)
    evals = _evaluation_iterations(T, int(cfg.eval_period))
    log.info("run %s seed=%s: %s on %s, T=%d, lr=%s, bs=%s",
             label or "-", cfg.seed, type(problem).__name__, manifold, T,
             cfg.lr.variant.value, cfg.bs.variant.value)

    record = RunRecord(label=label, seed=int(cfg.seed))
    sfo = 0
    start = time.perf_counter()
    for t in range(T):
        b = int(sizes[t])
        eta = float(etas[t])
        if t in evals:
            value, grad = problem.value_and_rgrad(x)
            gnorm = manifold.norm(x, grad)
            if not (math.isfinite(value) and math.isfinite(gnorm)):
                raise DivergedError(t, label, what="loss or gradient")
            row = TelemetryRow(
                iter=t, batch_size=b, lr=eta, sfo_cum=sfo, grad_norm=gnorm, loss=value,
                wall_ms=(time.perf_counter() - start) * 1e3,
            )
            record.rows.append(row)
            record.min_grad_norm_sq = min(record.min_grad_norm_sq, gnorm * gnorm)
            log.debug("t=%d b=%d lr=%.4g sfo=%d |grad|=%.6g loss=%.6g",
                      t, b, eta, sfo, gnorm, value)
        batch = sample_batch(rng, N, b)
        g = problem.rgrad(x, batch)
        if not np.all(np.isfinite(g)):
            raise DivergedError(t, label, what="stochastic gradient")
        x = manifold.retract(x, -eta * g)
        if not np.all(np.isfinite(x)):
            raise DivergedError(t, label, what="iterate")
        sfo += b

    record.final_point = x
    record.total_sfo = sfo
    log.info("run %s seed=%s finished: total_sfo=%d min|grad|^2=%.6g",
             label or "-", cfg.seed, sfo, record.min_grad_norm_sq)
    return record


def estimate_smoothness(problem, rng, samples=1000, radius=0.1):
    """Numerical retraction-smoothness constant.

    Returns the maximum over random (x, v), ||v|| <= radius, of
    2 (f(R_x(v)) - f(x) - <grad f(x), v>) / ||v||^2.
    """
    manifold = problem.manifold
    best = -math.inf
    for _ in range(samples):
        x = manifold.random_point(rng)
        v = manifold.random_tangent(x, rng) * (radius * (1.0 - rng.random()))
        fx, g = problem.value_and_rgrad(x)
        fy = problem.loss(manifold.retract(x, v))
        nv2 = manifold.inner(x, v, v)
        best = max(best, 2.0 * (fy - fx - manifold.inner(x, g, v)) / nv2)
    log.debug("smoothness estimate over %d samples: %.6g", samples, best)
    return best


def descent_trace(problem, x0, eta, steps):
    """Full-batch losses f(x_0), ..., f(x_steps) of RSGD with a constant step."""
    x = problem.manifold.check_point(x0)
    losses = [problem.loss(x)]
    for _ in range(steps):
        x = rsgd_step(problem, x, None, eta)
        losses.append(problem.loss(x))
    return np.asarray(losses)
