r"""Evaluable convergence bounds and SFO complexities.

Every bound has the form

.. math::
    \min_{t \in W} \mathbb{E}\|\mathrm{grad} f(x_t)\|^2
    \le \frac{2 (f(x_0) - f^\star) + L_r \sigma^2 S_2}{(2 - L_r \eta_{\max}) S_1},
    \qquad S_1 = \sum_{t \in W} \eta_t, \quad S_2 = \sum_{t \in W} \eta_t^2 / b_t

over the window ``W = {T_w, ..., T - 1}`` (``T_w = 0`` without warm-up).
``lemma1_bound`` sums the schedules directly. ``theorem_bound`` substitutes
closed-form lower bounds of S_1 and upper bounds of S_2 for the schedule at
hand, so it can never fall below the summed bound.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.special

from .errors import InfeasibleBudgetError, InvalidArgumentError
from .schedule import BatchSchedule, BsVariant, LrSchedule, LrVariant

log = logging.getLogger(__name__)

__all__ = [
    "BoundInputs",
    "BoundCase",
    "BoundConstants",
    "CriticalBatch",
    "SfoMode",
    "TradeoffTables",
    "classify_case",
    "schedule_sums",
    "lemma1_bound",
    "theorem_bound",
    "bound_constants",
    "sfo_constant",
    "sfo_total",
    "sfo_const",
    "critical_batch",
    "critical_batch_from_constants",
    "sfo_increasing",
    "sfo_eps_fixed_k",
    "sfo_eps_fixed_m",
    "sfo_eps_increasing",
    "zeta",
    "tradeoff_f",
    "tradeoff_g",
    "tradeoff_h",
    "tradeoff_curves",
    "bound_report",
]


class BoundCase(str, enum.Enum):
    CONSTANT_BS_DECAY = "constant_bs_decay"
    INCREASING_BS_DECAY = "increasing_bs_decay"
    INCREASING_BS_WARMUP = "increasing_bs_warmup"
    CONSTANT_BS_WARMUP = "constant_bs_warmup"


class SfoMode(str, enum.Enum):
    FIXED_K = "fixed_k"
    FIXED_M = "fixed_m"


@dataclass(frozen=True)
class BoundInputs:
    """Problem constants plus the schedules the bound is evaluated for.

    Args:
        f0_gap: f(x_0) - f^*, >= 0.
        L_r: retraction-smoothness constant, > 0.
        sigma_sq: variance bound of a single stochastic gradient, >= 0.
        lr, bs: learning-rate and batch-size schedules.
        T: total number of iterations.
    """

    f0_gap: float
    L_r: float
    sigma_sq: float
    lr: LrSchedule
    bs: BatchSchedule
    T: int

    @property
    def T_w(self):
        return self.lr.warmup_steps

    def validate(self):
        if not (self.f0_gap >= 0 and math.isfinite(self.f0_gap)):
            raise InvalidArgumentError(f"f0_gap must be >= 0, got {self.f0_gap}")
        if not (self.L_r > 0 and math.isfinite(self.L_r)):
            raise InvalidArgumentError(f"L_r must be > 0, got {self.L_r}")
        if not (self.sigma_sq >= 0 and math.isfinite(self.sigma_sq)):
            raise InvalidArgumentError(f"sigma_sq must be >= 0, got {self.sigma_sq}")
        if int(self.T) != self.T or self.T < 1:
            raise InvalidArgumentError(f"T must be a positive integer, got {self.T}")
        if self.T_w >= self.T:
            raise InvalidArgumentError(
                f"warm-up length T_w = {self.T_w} leaves no iterations before T = {self.T}"
            )
        self.lr.check_smoothness(self.L_r)


def classify_case(lr, bs):
    if lr.is_warmup:
        return BoundCase.INCREASING_BS_WARMUP if bs.is_increasing else BoundCase.CONSTANT_BS_WARMUP
    return BoundCase.INCREASING_BS_DECAY if bs.is_increasing else BoundCase.CONSTANT_BS_DECAY


def schedule_sums(lr, bs, T):
    """Exact window sums (sum eta_t, sum eta_t^2 / b_t) with unrounded b_t."""
    t_w = lr.warmup_steps
    eta = lr.values(T)[t_w:]
    b = bs.raw_values(T)[t_w:]
    return float(np.sum(eta)), float(np.sum(eta * eta / b))


def lemma1_bound(inputs):
    inputs.validate()
    s1, s2 = schedule_sums(inputs.lr, inputs.bs, inputs.T)
    L = inputs.L_r
    return (2.0 * inputs.f0_gap + L * inputs.sigma_sq * s2) / ((2.0 - L * inputs.lr.eta_max) * s1)


def zeta(c):
    """Riemann zeta function for real c > 1."""
    if not c > 1:
        raise InvalidArgumentError(f"zeta(c) diverges for c <= 1, got {c}")
    return float(scipy.special.zeta(c, 1))


def _batch_series_bound(bs):
    # upper bound of sum_t 1/b_t over all t, summed stage by stage
    if bs.variant is BsVariant.EXPONENTIAL:
        return bs.K * bs.gamma / (bs.b0 * (bs.gamma - 1.0))
    a_bar = min(bs.a, float(bs.b0))
    return bs.K * zeta(bs.c) / a_bar ** bs.c


def _lr_sum_lower(lr, T):
    t_w = lr.warmup_steps
    span = T - t_w
    eta, eta_min = lr.eta_max, lr.eta_min
    variant = lr.decay_variant
    if variant is LrVariant.CONSTANT:
        return eta * span
    if variant is LrVariant.DIMINISHING:
        if t_w == 0:
            return eta * math.sqrt(T)
        return 2.0 * eta * (math.sqrt(T + 1.0) - math.sqrt(t_w + 1.0))
    if variant is LrVariant.COSINE:
        return 0.5 * (eta + eta_min) * span
    return (eta + lr.p * eta_min) / (lr.p + 1.0) * span


def _lr_sq_sum_upper(lr, bs, T):
    t_w = lr.warmup_steps
    span = T - t_w
    eta, eta_min = lr.eta_max, lr.eta_min
    if bs.is_increasing:
        return eta * eta * _batch_series_bound(bs)
    b = float(bs.b0)
    variant = lr.decay_variant
    if variant is LrVariant.DIMINISHING:
        harmonic = 1.0 + (math.log(T) if t_w == 0 else math.log(T / t_w))
        return eta * eta * harmonic / b
    if variant is LrVariant.POLY_DECAY and t_w == 0:
        p, spread = lr.p, eta - eta_min
        return (
            eta_min ** 2 * T
            + 2.0 * eta_min * spread * (T / (p + 1.0) + 1.0)
            + spread ** 2 * (T / (2.0 * p + 1.0) + 1.0)
        ) / b
    return eta * eta * span / b


def _check_case(case, inputs):
    case = BoundCase(case)
    actual = classify_case(inputs.lr, inputs.bs)
    if case is not actual:
        raise InvalidArgumentError(
            f"case {case.value} does not match the schedules ({actual.value})"
        )
    return case


def theorem_bound(case, inputs):
    """Closed-form bound for ``case``; always >= ``lemma1_bound(inputs)``."""
    _check_case(case, inputs)
    inputs.validate()
    L = inputs.L_r
    s1 = _lr_sum_lower(inputs.lr, inputs.T)
    s2 = _lr_sq_sum_upper(inputs.lr, inputs.bs, inputs.T)
    return (2.0 * inputs.f0_gap + L * inputs.sigma_sq * s2) / ((2.0 - L * inputs.lr.eta_max) * s1)


@dataclass(frozen=True)
class BoundConstants:
    """Constants of ``theorem_bound = (q1 + q2 sigma^2 / b) / horizon``.

    For a constant batch size ``b`` the same bound reads
    ``q1 / horizon + q2 sigma^2 / b`` (q2 absorbs the horizon); for an
    increasing batch size ``b = b0`` and ``q3 = q2 / K``.
    """

    case: BoundCase
    q1: float
    q2: float
    horizon: int
    batch: int
    q3: Optional[float] = None

    def bound(self, sigma_sq):
        if self.case in (BoundCase.CONSTANT_BS_DECAY, BoundCase.CONSTANT_BS_WARMUP):
            return self.q1 / self.horizon + self.q2 * sigma_sq / self.batch
        return (self.q1 + self.q2 * sigma_sq / self.batch) / self.horizon


def bound_constants(inputs):
    inputs.validate()
    lr, bs = inputs.lr, inputs.bs
    if lr.decay_variant is LrVariant.DIMINISHING:
        raise InvalidArgumentError(
            "the diminishing learning rate bound decays like log(T)/sqrt(T), "
            "it has no q1/T + q2 sigma^2/b form"
        )
    case = classify_case(lr, bs)
    L = inputs.L_r
    horizon = inputs.T - inputs.T_w
    kappa = _lr_sum_lower(lr, inputs.T) / horizon
    denom = (2.0 - L * lr.eta_max) * kappa
    q1 = 2.0 * inputs.f0_gap / denom
    s2 = _lr_sq_sum_upper(lr, bs, inputs.T)
    if bs.is_increasing:
        q2 = L * s2 * bs.b0 / denom
        return BoundConstants(case, q1, q2, horizon, bs.b0, q3=q2 / bs.K)
    q2 = L * s2 * bs.b0 / (denom * horizon)
    return BoundConstants(case, q1, q2, horizon, bs.b0)


def sfo_constant(b, T):
    """SFO complexity b*T of a constant batch size."""
    return int(b) * int(T)


def sfo_total(bs, T):
    return bs.total_sfo(T)


def sfo_const(b, q1, q2, sigma_sq, eps):
    """SFO needed by a constant batch ``b`` to push the bound below eps^2.

    b^2 q1 / (b eps^2 - q2 sigma^2); infeasible when the noise floor
    q2 sigma^2 / b already exceeds eps^2.
    """
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be > 0, got {eps}")
    denom = b * eps * eps - q2 * sigma_sq
    if denom <= 0:
        raise InfeasibleBudgetError(
            f"batch size {b} cannot reach eps={eps:g}: noise floor q2*sigma^2/b >= eps^2"
        )
    return b * b * q1 / denom


@dataclass(frozen=True)
class CriticalBatch:
    b_star: float
    sfo: float
    best_batch: int
    best_sfo: float


def critical_batch_from_constants(q1, q2, sigma_sq, eps):
    """Critical batch size b* = 2 q2 sigma^2 / eps^2 and SFO there, 4 q1 q2 sigma^2 / eps^4."""
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be > 0, got {eps}")
    noise = q2 * sigma_sq
    eps_sq = eps * eps
    if noise == 0:
        sfo = q1 / eps_sq
        return CriticalBatch(b_star=0.0, sfo=sfo, best_batch=1, best_sfo=sfo)
    b_star = 2.0 * noise / eps_sq
    sfo = 4.0 * q1 * noise / eps_sq ** 2
    candidates = {max(1, math.floor(b_star)), math.ceil(b_star)}
    feasible = [b for b in candidates if b * eps_sq > noise]
    best = min(feasible, key=lambda b: sfo_const(b, q1, q2, sigma_sq, eps))
    return CriticalBatch(b_star, sfo, int(best), sfo_const(best, q1, q2, sigma_sq, eps))


def critical_batch(inputs, eps):
    case = classify_case(inputs.lr, inputs.bs)
    if inputs.bs.is_increasing:
        raise InvalidArgumentError(f"critical batch size needs a constant batch size, got {case.value}")
    k = bound_constants(inputs)
    return critical_batch_from_constants(k.q1, k.q2, inputs.sigma_sq, eps)


def sfo_increasing(b0, gamma, K, M):
    """SFO of M full stages of exponential growth: sum_m K * round(b0 gamma^m)."""
    if int(M) != M or M < 1:
        raise InvalidArgumentError(f"M must be a positive integer, got {M}")
    bs = BatchSchedule(BsVariant.EXPONENTIAL, b0=b0, gamma=gamma, K=K)
    return bs.total_sfo(int(M) * bs.K)


def _geometric(gamma, power):
    try:
        return math.pow(gamma, power)
    except OverflowError:
        log.warning("gamma^%g overflows, reporting an infinite SFO", power)
        return math.inf


def sfo_eps_fixed_k(q1, q2, sigma_sq, b0, gamma, K, eps):
    """Increasing-BS SFO for eps with the stage length K fixed (T = M K grows with 1/eps^2)."""
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be > 0, got {eps}")
    T = (q1 + q2 * sigma_sq / b0) / (eps * eps)
    return b0 * K / (gamma - 1.0) * (_geometric(gamma, T / K) - 1.0)


def sfo_eps_fixed_m(q1, q3, sigma_sq, b0, gamma, M, eps):
    """Increasing-BS SFO for eps with the number of stages M fixed (K grows with 1/eps^2)."""
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be > 0, got {eps}")
    denom = M * eps * eps - q3 * sigma_sq / b0
    if denom <= 0:
        raise InfeasibleBudgetError(
            f"M={M} stages cannot reach eps={eps:g}: M eps^2 <= q3 sigma^2 / b0"
        )
    K = q1 / denom
    return b0 * (_geometric(gamma, M) - 1.0) / (gamma - 1.0) * K


def sfo_eps_increasing(inputs, eps, mode, M=None):
    bs = inputs.bs
    if bs.variant is not BsVariant.EXPONENTIAL:
        raise InvalidArgumentError("SFO for eps is defined for the exponential growth batch size")
    k = bound_constants(inputs)
    mode = SfoMode(mode)
    if mode is SfoMode.FIXED_K:
        return sfo_eps_fixed_k(k.q1, k.q2, inputs.sigma_sq, bs.b0, bs.gamma, bs.K, eps)
    M = inputs.T // bs.K if M is None else M
    if M < 1:
        raise InvalidArgumentError(f"M must be >= 1, got {M}")
    return sfo_eps_fixed_m(k.q1, k.q3, inputs.sigma_sq, bs.b0, bs.gamma, M, eps)


def tradeoff_f(gamma):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 1):
        raise InvalidArgumentError("f(gamma) needs gamma > 1")
    return 1.0 + gamma / (gamma - 1.0)


def tradeoff_g(b0):
    b0 = np.asarray(b0, dtype=float)
    if np.any(b0 < 2):
        raise InvalidArgumentError("g(b0) needs b0 >= 2")
    return b0 ** 3 / (b0 ** 2 - 1.0)


def tradeoff_h(M, gamma):
    M = np.asarray(M, dtype=float)
    if np.any(M < 1):
        raise InvalidArgumentError("h(M) needs M >= 1")
    if not gamma > 1:
        raise InvalidArgumentError("h(M) needs gamma > 1")
    return float(gamma) ** M / M


@dataclass(frozen=True)
class TradeoffTables:
    gamma: np.ndarray
    f: np.ndarray
    b0: np.ndarray
    g: np.ndarray
    M: np.ndarray
    h: np.ndarray
    gamma_fixed: float

    def rows(self):
        """(curve, x, value) triples in table order."""
        out = []
        for name, xs, ys in (("f", self.gamma, self.f), ("g", self.b0, self.g), ("h", self.M, self.h)):
            out.extend((name, float(x), float(y)) for x, y in zip(xs, ys))
        return out


def tradeoff_curves(gamma_range, b0_range, M_range, gamma_fixed=3.0):
    """Tabulates f(gamma) = 1 + gamma/(gamma-1), g(b0) = b0^3/(b0^2-1), h(M) = gamma^M/M."""
    gamma = np.asarray(gamma_range, dtype=float)
    b0 = np.asarray(b0_range, dtype=float)
    M = np.asarray(M_range, dtype=float)
    return TradeoffTables(
        gamma=gamma, f=tradeoff_f(gamma),
        b0=b0, g=tradeoff_g(b0),
        M=M, h=tradeoff_h(M, gamma_fixed),
        gamma_fixed=float(gamma_fixed),
    )


def bound_report(inputs, eps=None):
    """Dictionary report used by the ``analyze`` command."""
    case = classify_case(inputs.lr, inputs.bs)
    s1, s2 = schedule_sums(inputs.lr, inputs.bs, inputs.T)
    report = {
        "case": case.value,
        "T": int(inputs.T),
        "T_w": int(inputs.T_w),
        "eta_max": inputs.lr.eta_max,
        "sum_eta": s1,
        "sum_eta_sq_over_b": s2,
        "lemma1": lemma1_bound(inputs),
        "theorem": theorem_bound(case, inputs),
        "sfo_total": sfo_total(inputs.bs, inputs.T),
    }
    if inputs.lr.decay_variant is not LrVariant.DIMINISHING:
        k = bound_constants(inputs)
        report["constants"] = {"q1": k.q1, "q2": k.q2, "q3": k.q3, "horizon": k.horizon}
    if eps is None:
        return report
    report["eps"] = float(eps)
    if "constants" not in report:
        return report
    k = report["constants"]
    if not inputs.bs.is_increasing:
        cb = critical_batch_from_constants(k["q1"], k["q2"], inputs.sigma_sq, eps)
        report["critical_batch"] = {
            "b_star": cb.b_star, "sfo": cb.sfo, "best_batch": cb.best_batch, "best_sfo": cb.best_sfo,
        }
    elif inputs.bs.variant is BsVariant.EXPONENTIAL:
        sfo = {}
        for mode in SfoMode:
            try:
                sfo[mode.value] = sfo_eps_increasing(inputs, eps, mode)
            except InfeasibleBudgetError as exc:
                log.warning("%s", exc)
                sfo[mode.value] = None
        report["sfo_eps"] = sfo
    return report
