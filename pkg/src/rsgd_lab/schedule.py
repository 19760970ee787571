r"""Closed-form learning-rate and batch-size schedules.

Schedules are stateless: ``lr_at(s, t, T)`` and ``bs_at(s, t)`` are pure
functions of the iteration index, so the optimizer, the theory layer and the
reports all read the same numbers.

Learning rates (``t`` in ``[0, T)``):

.. math::
    \text{constant:}\quad \eta_t = \eta_{\max}
    \qquad
    \text{diminishing:}\quad \eta_t = \eta_{\max} / \sqrt{t + 1}

    \text{cosine:}\quad \eta_t = \eta_{\min} + (\eta_{\max} - \eta_{\min})
        \tfrac{1}{2}(1 + \cos(\pi t / T))

    \text{polydecay:}\quad \eta_t = \eta_{\min} + (\eta_{\max} - \eta_{\min})(1 - t/T)^p

Warm-up schedules grow for ``T_w = l_w K'`` steps, stage ``m = t // K'``:
``warmup_exp`` uses ``eta0 * delta**m`` and ``warmup_poly`` uses
``(s * m + eta0)**q``. Afterwards one of the four decay shapes runs on
``(t - T_w) / (T - T_w)`` starting from ``eta_max = eta_{T_w - 1}``; the
diminishing decay keeps the global ``eta_max / sqrt(t + 1)``.

Batch sizes grow every ``K`` steps, stage ``m = t // K``: ``bs_exp`` uses
``b0 * gamma**m`` and ``bs_poly`` uses ``(a * m + b0)**c``. Non-integral
values are rounded half-up with a floor of 1.
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError

log = logging.getLogger(__name__)

__all__ = [
    "LrVariant",
    "BsVariant",
    "DECAY_VARIANTS",
    "WARMUP_VARIANTS",
    "LrSchedule",
    "BatchSchedule",
    "WarmupCompat",
    "WarmupReport",
    "lr_at",
    "bs_at",
    "decay_factor",
    "validate_warmup",
    "warmup_compat",
    "initial_batch_presets",
]


class LrVariant(str, enum.Enum):
    CONSTANT = "constant"
    DIMINISHING = "diminishing"
    COSINE = "cosine"
    POLY_DECAY = "polydecay"
    WARMUP_EXP = "warmup_exp"
    WARMUP_POLY = "warmup_poly"


class BsVariant(str, enum.Enum):
    CONSTANT = "bs_constant"
    EXPONENTIAL = "bs_exp"
    POLYNOMIAL = "bs_poly"


DECAY_VARIANTS = (
    LrVariant.CONSTANT,
    LrVariant.DIMINISHING,
    LrVariant.COSINE,
    LrVariant.POLY_DECAY,
)
WARMUP_VARIANTS = (LrVariant.WARMUP_EXP, LrVariant.WARMUP_POLY)

LR_KEYS = {
    LrVariant.CONSTANT: ("eta_max",),
    LrVariant.DIMINISHING: ("eta_max",),
    LrVariant.COSINE: ("eta_max", "eta_min"),
    LrVariant.POLY_DECAY: ("eta_max", "eta_min", "p"),
    LrVariant.WARMUP_EXP: ("eta0", "delta", "k_prime", "l_w", "decay", "eta_min", "p"),
    LrVariant.WARMUP_POLY: ("eta0", "s", "q", "k_prime", "l_w", "decay", "eta_min", "p"),
}

BS_KEYS = {
    BsVariant.CONSTANT: ("b0",),
    BsVariant.EXPONENTIAL: ("b0", "gamma", "K"),
    BsVariant.POLYNOMIAL: ("b0", "a", "c", "K"),
}


def _count(value, name, minimum=1):
    if value is None:
        raise InvalidArgumentError(f"{name} is required")
    if isinstance(value, bool) or float(value) != int(value):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    return value


def _positive(value, name, lower=0.0):
    if value is None:
        raise InvalidArgumentError(f"{name} is required")
    value = float(value)
    if not (math.isfinite(value) and value > lower):
        raise InvalidArgumentError(f"{name} must be > {lower:g}, got {value!r}")
    return value


def decay_factor(variant, frac, p=2.0):
    """Shape of a decay curve at ``frac = t / T``: 1 at the start, 0 at the end.

    The learning rate is ``eta_max * c + eta_min * (1 - c)``, which hits both
    endpoints exactly.
    """
    variant = LrVariant(variant)
    frac = np.asarray(frac, dtype=float)
    if variant is LrVariant.CONSTANT:
        return np.ones_like(frac)
    if variant is LrVariant.COSINE:
        return 0.5 * (1.0 + np.cos(np.pi * frac))
    if variant is LrVariant.POLY_DECAY:
        return (1.0 - frac) ** p
    raise InvalidArgumentError(f"{variant.value} has no fractional decay shape")


@dataclass(frozen=True)
class LrSchedule:
    """Learning-rate schedule descriptor.

    For warm-up variants ``eta_max`` is derived (the value at ``T_w - 1``) and
    any value passed in is replaced.
    """

    variant: LrVariant
    eta_max: float = 0.1
    eta_min: float = 0.0
    p: float = 2.0
    eta0: Optional[float] = None
    delta: Optional[float] = None
    s: Optional[float] = None
    q: Optional[float] = None
    k_prime: Optional[int] = None
    l_w: Optional[int] = None
    decay: LrVariant = LrVariant.CONSTANT

    def __post_init__(self):
        set_ = object.__setattr__
        variant = LrVariant(self.variant)
        set_(self, "variant", variant)
        set_(self, "decay", LrVariant(self.decay))
        set_(self, "eta_min", float(self.eta_min))
        set_(self, "p", _positive(self.p, "p"))
        if self.eta_min < 0:
            raise InvalidArgumentError(f"eta_min must be >= 0, got {self.eta_min}")

        if variant in WARMUP_VARIANTS:
            if self.decay not in DECAY_VARIANTS:
                raise InvalidArgumentError(
                    f"decay must be one of {[v.value for v in DECAY_VARIANTS]}"
                )
            set_(self, "eta0", _positive(self.eta0, "eta0"))
            set_(self, "k_prime", _count(self.k_prime, "k_prime"))
            set_(self, "l_w", _count(self.l_w, "l_w"))
            if variant is LrVariant.WARMUP_EXP:
                set_(self, "delta", _positive(self.delta, "delta", lower=1.0))
            else:
                set_(self, "s", _positive(self.s, "s"))
                set_(self, "q", _positive(self.q, "q", lower=1.0))
            peak = float(self._warmup_values(np.array([self.l_w - 1]))[0])
            if not math.isfinite(peak):
                raise InvalidArgumentError("warm-up peak learning rate overflows")
            set_(self, "eta_max", peak)
        else:
            set_(self, "eta_max", _positive(self.eta_max, "eta_max"))
        if self.eta_min > self.eta_max:
            raise InvalidArgumentError(
                f"need eta_min <= eta_max, got {self.eta_min} > {self.eta_max}"
            )

    @property
    def is_warmup(self):
        return self.variant in WARMUP_VARIANTS

    @property
    def decay_variant(self):
        """The decay shape in effect after warm-up (the variant itself otherwise)."""
        return self.decay if self.is_warmup else self.variant

    @property
    def warmup_steps(self):
        return self.l_w * self.k_prime if self.is_warmup else 0

    @property
    def peak(self):
        return self.eta_max

    def check_smoothness(self, L_r=None):
        """Checks eta_max < 2 / L_r; skipped (and logged) when L_r is unknown."""
        if L_r is None:
            log.info("L_r unknown, skipping the eta_max < 2/L_r check")
            return
        if not self.eta_max * float(L_r) < 2.0:
            raise InvalidArgumentError(
                f"eta_max = {self.eta_max:g} violates eta_max < 2/L_r = {2.0 / L_r:g}"
            )

    def _warmup_values(self, m):
        if self.variant is LrVariant.WARMUP_EXP:
            return self.eta0 * self.delta ** m.astype(float)
        return (self.s * m + self.eta0) ** self.q

    def values(self, T, t=None):
        """Learning rates at the iterations ``t`` (default: all of ``range(T)``)."""
        T = _count(T, "T")
        t = np.arange(T) if t is None else np.asarray(t, dtype=np.int64)
        if t.size and (t.min() < 0 or t.max() >= T):
            raise InvalidArgumentError(f"iteration index outside [0, {T})")
        t_w = self.warmup_steps
        if t_w > T:
            raise InvalidArgumentError(f"warm-up length T_w = {t_w} exceeds T = {T}")

        out = np.empty(t.shape, dtype=float)
        warm = t < t_w
        if np.any(warm):
            out[warm] = self._warmup_values(t[warm] // self.k_prime)
        rest = ~warm
        if np.any(rest):
            td = t[rest]
            variant = self.decay_variant
            if variant is LrVariant.CONSTANT:
                out[rest] = self.eta_max
            elif variant is LrVariant.DIMINISHING:
                out[rest] = self.eta_max / np.sqrt(td + 1.0)
            else:
                c = decay_factor(variant, (td - t_w) / float(T - t_w), self.p)
                out[rest] = self.eta_max * c + self.eta_min * (1.0 - c)
        return out

    def at(self, t, T):
        return float(self.values(T, np.array([t]))[0])

    def to_dict(self):
        params = {}
        for key in LR_KEYS[self.variant]:
            value = getattr(self, key)
            params[key] = value.value if isinstance(value, enum.Enum) else value
        return {self.variant.value: params}

    @classmethod
    def from_dict(cls, doc):
        name, params = _single_entry(doc, "lr")
        try:
            variant = LrVariant(name)
        except ValueError:
            raise InvalidArgumentError(f"unknown learning-rate schedule '{name}'") from None
        _reject_unknown(params, LR_KEYS[variant], name)
        return cls(variant=variant, **params)


@dataclass(frozen=True)
class BatchSchedule:
    """Batch-size schedule descriptor (b0, gamma, a, c, K)."""

    variant: BsVariant
    b0: int = 1
    gamma: Optional[float] = None
    a: Optional[float] = None
    c: Optional[float] = None
    K: Optional[int] = None

    def __post_init__(self):
        set_ = object.__setattr__
        variant = BsVariant(self.variant)
        set_(self, "variant", variant)
        set_(self, "b0", _count(self.b0, "b0"))
        if variant is BsVariant.EXPONENTIAL:
            set_(self, "gamma", _positive(self.gamma, "gamma", lower=1.0))
            set_(self, "K", _count(self.K, "K"))
        elif variant is BsVariant.POLYNOMIAL:
            set_(self, "a", _positive(self.a, "a"))
            set_(self, "c", _positive(self.c, "c", lower=1.0))
            set_(self, "K", _count(self.K, "K"))

    @property
    def is_increasing(self):
        return self.variant is not BsVariant.CONSTANT

    def stage_raw(self, m):
        """Unrounded batch size of stage ``m`` (array friendly)."""
        m = np.asarray(m, dtype=float)
        if self.variant is BsVariant.EXPONENTIAL:
            return self.b0 * self.gamma ** m
        if self.variant is BsVariant.POLYNOMIAL:
            return (self.a * m + self.b0) ** self.c
        return np.full(m.shape, float(self.b0))

    def stage_of(self, t):
        if self.variant is BsVariant.CONSTANT:
            return np.zeros_like(np.asarray(t))
        return np.asarray(t) // self.K

    def raw_values(self, T):
        return self.stage_raw(self.stage_of(np.arange(_count(T, "T"))))

    def raw_at(self, t):
        if t < 0:
            raise InvalidArgumentError(f"iteration index must be >= 0, got {t}")
        return float(self.stage_raw(self.stage_of(t)))

    def stage_size(self, m):
        raw = float(self.stage_raw(m))
        if not math.isfinite(raw) or raw >= 2.0 ** 62:
            raise InvalidArgumentError(f"batch size of stage {m} overflows")
        return max(1, int(math.floor(raw + 0.5)))

    def at(self, t):
        if t < 0:
            raise InvalidArgumentError(f"iteration index must be >= 0, got {t}")
        return self.stage_size(int(self.stage_of(t)))

    def values(self, T):
        T = _count(T, "T")
        if self.variant is BsVariant.CONSTANT:
            return np.full(T, self.b0, dtype=np.int64)
        stages = np.arange(T) // self.K
        sizes = np.array([self.stage_size(m) for m in range(int(stages[-1]) + 1)], dtype=np.int64)
        return sizes[stages]

    def total_sfo(self, T):
        """Exact sum of ``bs_at(t)`` over ``t < T`` as a Python int."""
        T = _count(T, "T")
        if self.variant is BsVariant.CONSTANT:
            return self.b0 * T
        full, tail = divmod(T, self.K)
        total = sum(self.K * self.stage_size(m) for m in range(full))
        if tail:
            total += tail * self.stage_size(full)
        return total

    def to_dict(self):
        return {self.variant.value: {key: getattr(self, key) for key in BS_KEYS[self.variant]}}

    @classmethod
    def from_dict(cls, doc):
        name, params = _single_entry(doc, "bs")
        try:
            variant = BsVariant(name)
        except ValueError:
            raise InvalidArgumentError(f"unknown batch-size schedule '{name}'") from None
        _reject_unknown(params, BS_KEYS[variant], name)
        return cls(variant=variant, **params)


def _single_entry(doc, section):
    if not isinstance(doc, dict) or len(doc) != 1:
        raise InvalidArgumentError(f"{section} must hold exactly one schedule name")
    name, params = next(iter(doc.items()))
    if not isinstance(params, dict):
        raise InvalidArgumentError(f"{section}.{name} must be a mapping of parameters")
    return name, dict(params)


def _reject_unknown(params, allowed, name):
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise InvalidArgumentError(f"unknown key(s) {unknown} for '{name}'")


def lr_at(s, t, T):
    return s.at(t, T)


def bs_at(s, t):
    return s.at(t)


@dataclass(frozen=True)
class WarmupCompat:
    """Compatibility data between a warm-up LR and a batch schedule.

    ``l`` is K / K' (may be non-integral here; the check reports it).
    ``gamma``/``K`` are None for a constant batch size and ``delta`` is None
    for polynomial warm-up, which skips the corresponding checks.
    """

    l: float
    k_prime: int
    l_w: int
    T: int
    K: Optional[int] = None
    gamma: Optional[float] = None
    delta: Optional[float] = None


@dataclass(frozen=True)
class WarmupReport:
    ok: bool
    violations: Tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def validate_warmup(ws):
    """Checks K = l K', delta^(2l) < gamma and T_w = l_w K' <= T.

    Returns a ``WarmupReport`` naming each failed inequality; never raises.
    """
    violations = []
    if ws.K is not None:
        if ws.l < 1 or float(ws.l) != int(ws.l) or ws.K != int(ws.l) * ws.k_prime:
            violations.append(f"K = l*K' with integer l >= 1 (K={ws.K}, K'={ws.k_prime})")
    if ws.gamma is not None and ws.delta is not None:
        lhs = ws.delta ** (2 * ws.l)
        if not lhs < ws.gamma:
            violations.append(f"delta^(2l) < gamma ({lhs:.6g} >= {ws.gamma:.6g})")
    t_w = ws.l_w * ws.k_prime
    if t_w > ws.T:
        violations.append(f"T_w = l_w*K' <= T ({t_w} > {ws.T})")
    return WarmupReport(ok=not violations, violations=tuple(violations))


def warmup_compat(lr, bs, T):
    if not lr.is_warmup:
        raise InvalidArgumentError("warm-up compatibility needs a warm-up learning rate")
    if bs.is_increasing:
        return WarmupCompat(
            l=bs.K / lr.k_prime,
            k_prime=lr.k_prime,
            l_w=lr.l_w,
            T=T,
            K=bs.K,
            gamma=bs.gamma,
            delta=lr.delta,
        )
    return WarmupCompat(l=1, k_prime=lr.k_prime, l_w=lr.l_w, T=T)


def initial_batch_presets(N):
    """Large, medium and small initial batch sizes 3^k, 3^(k-3), 3^(k-5).

    ``k`` is the largest integer with 3^k < N.
    """
    N = _count(N, "N", minimum=2)
    k = 0
    while 3 ** (k + 1) < N:
        k += 1
    return 3 ** k, 3 ** max(k - 3, 0), 3 ** max(k - 5, 0)
