"""Experiment configuration documents.

A config is one JSON document with the sections ``problem``, ``lr``, ``bs``
and ``run``, plus ``bound`` for the ``analyze`` command::

    {
      "problem": {"kind": "pca", "r": 5,
                  "dataset": {"kind": "gaussian_low_rank", "N": 2000, "n": 64,
                              "r_true": 5, "noise": 0.1, "seed": 7}},
      "lr": {"cosine": {"eta_max": 0.01, "eta_min": 0.0}},
      "bs": {"bs_exp": {"b0": 27, "gamma": 3.0, "K": 1000}},
      "run": {"label": "exp", "T": 3000, "eval_period": 10,
              "seeds": [0, 1, 2, 3, 4], "output_dir": "out", "jobs": 1},
      "bound": {"f0_gap": 1.0, "L_r": 1.0, "sigma_sq": 1.0, "T": 10, "eps": 0.1}
    }

Every violation raises ``ConfigError`` naming the dotted key.
"""

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from .analysis import BoundInputs
from .data import CSV_PROBLEMS, DatasetKind, DatasetSpec, generate
from .errors import ConfigError, InvalidArgumentError
from .optimizer import RsgdConfig
from .schedule import (
    BS_KEYS,
    LR_KEYS,
    BatchSchedule,
    LrSchedule,
    validate_warmup,
    warmup_compat,
)

log = logging.getLogger(__name__)

__all__ = [
    "PROBLEM_KINDS",
    "ProblemConfig",
    "RunSettings",
    "BoundSettings",
    "ExperimentConfig",
    "load_config",
]

# dataset kinds each objective accepts
PROBLEM_KINDS = {
    "pca": (DatasetKind.GAUSSIAN_LOW_RANK, DatasetKind.DENSE_CSV),
    "lrmc": (DatasetKind.MASKED_LOW_RANK, DatasetKind.TRIPLET_FILE),
    "sqrt_abs": (DatasetKind.SPHERE_UNIFORM, DatasetKind.DENSE_CSV),
}

_INT_PARAMS = {"k_prime", "l_w", "b0", "K"}
_STR_PARAMS = {"decay"}

_MISSING = object()


def _mapping(doc, key):
    if not isinstance(doc, dict):
        raise ConfigError(key, "must be a mapping")
    return doc


def _reject_unknown(doc, allowed, prefix):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{prefix}.{unknown[0]}", "unknown key")


def _coerce(value, kind, key):
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true or false, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _get(doc, name, kind, prefix, default=_MISSING):
    key = f"{prefix}.{name}"
    value = doc.get(name)
    if value is None:
        if default is _MISSING:
            raise ConfigError(key, "required")
        return default
    return _coerce(value, kind, key)


def _schedule(doc, section, cls, keys):
    _mapping(doc, section)
    if len(doc) != 1:
        raise ConfigError(section, "must hold exactly one schedule name")
    name, params = next(iter(doc.items()))
    prefix = f"{section}.{name}"
    params = _mapping(params, prefix)
    variant_keys = {v.value: k for v, k in keys.items()}
    if name not in variant_keys:
        raise ConfigError(section, f"unknown schedule '{name}'")
    _reject_unknown(params, variant_keys[name], prefix)
    typed = {}
    for param, value in params.items():
        kind = int if param in _INT_PARAMS else str if param in _STR_PARAMS else float
        typed[param] = _coerce(value, kind, f"{prefix}.{param}")
    try:
        return cls.from_dict({name: typed})
    except (InvalidArgumentError, ValueError) as exc:
        # schedule messages open with the offending parameter name
        first = str(exc).split(" ", 1)[0]
        raise ConfigError(f"{prefix}.{first}" if first in typed else prefix, str(exc)) from None


@dataclass(frozen=True)
class ProblemConfig:
    kind: str
    r: int
    dataset: DatasetSpec

    @classmethod
    def from_dict(cls, data):
        data = _mapping(data, "problem")
        _reject_unknown(data, ("kind", "r", "dataset"), "problem")
        kind = _get(data, "kind", str, "problem")
        if kind not in PROBLEM_KINDS:
            raise ConfigError("problem.kind", f"must be one of {sorted(PROBLEM_KINDS)}, got {kind!r}")
        if "dataset" not in data:
            raise ConfigError("problem.dataset", "required")
        ds = _mapping(data["dataset"], "problem.dataset")
        _reject_unknown(ds, [f.name for f in dataclasses.fields(DatasetSpec)], "problem.dataset")
        try:
            ds_kind = DatasetKind(_get(ds, "kind", str, "problem.dataset"))
        except ValueError:
            raise ConfigError("problem.dataset.kind", f"unknown dataset kind {ds['kind']!r}") from None
        if ds_kind not in PROBLEM_KINDS[kind]:
            raise ConfigError(
                "problem.dataset.kind", f"{ds_kind.value} cannot feed a {kind} problem"
            )
        p = "problem.dataset"
        spec = DatasetSpec(
            kind=ds_kind,
            N=_get(ds, "N", int, p, 0),
            n=_get(ds, "n", int, p, 0),
            r_true=_get(ds, "r_true", int, p, 1),
            noise=_get(ds, "noise", float, p, 0.0),
            mask_density=_get(ds, "mask_density", float, p, 1.0),
            seed=_get(ds, "seed", int, p, 0),
            path=_get(ds, "path", str, p, None),
            normalize=_get(ds, "normalize", bool, p, False),
            problem=_get(ds, "problem", str, p, kind if kind in CSV_PROBLEMS else "pca"),
        )
        if ds_kind is DatasetKind.DENSE_CSV and spec.problem != kind:
            raise ConfigError("problem.dataset.problem", f"must match problem.kind {kind!r}")
        try:
            spec.validate()
        except InvalidArgumentError as exc:
            raise ConfigError(p, str(exc)) from None
        r = _get(data, "r", int, "problem", 1 if kind == "sqrt_abs" else spec.r_true)
        if kind == "sqrt_abs" and r != 1:
            raise ConfigError("problem.r", "the sphere problem has r = 1")
        if r < 1 or (spec.n and r > spec.n):
            raise ConfigError("problem.r", f"need 1 <= r <= n, got {r}")
        return cls(kind=kind, r=r, dataset=spec)

    def to_dict(self):
        return {"kind": self.kind, "r": self.r, "dataset": self.dataset.to_dict()}

    def build(self):
        return generate(self.dataset, r=self.r)


@dataclass(frozen=True)
class RunSettings:
    label: str
    T: int
    eval_period: int = 10
    seeds: Tuple[int, ...] = (0,)
    output_dir: str = "out"
    jobs: int = 1
    eta_max_grid: Optional[Tuple[float, ...]] = None

    @classmethod
    def from_dict(cls, data):
        data = _mapping(data, "run")
        _reject_unknown(data, [f.name for f in dataclasses.fields(cls)], "run")
        T = _get(data, "T", int, "run")
        if T < 1:
            raise ConfigError("run.T", f"must be >= 1, got {T}")
        label = _get(data, "label", str, "run", "run")
        if not label or "/" in label:
            raise ConfigError("run.label", f"must be a non-empty file-name-safe string, got {label!r}")
        eval_period = _get(data, "eval_period", int, "run", min(10, T))
        if not 1 <= eval_period <= T:
            raise ConfigError("run.eval_period", f"must lie in [1, T={T}], got {eval_period}")
        seeds = data.get("seeds", [0])
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("run.seeds", "must be a non-empty list of integers")
        seeds = tuple(_coerce(s, int, "run.seeds") for s in seeds)
        if len(set(seeds)) != len(seeds):
            raise ConfigError("run.seeds", "seeds must be unique")
        if any(not 0 <= s < 2 ** 64 for s in seeds):
            raise ConfigError("run.seeds", "seeds must be 64-bit unsigned integers")
        jobs = _get(data, "jobs", int, "run", 1)
        if jobs < 1:
            raise ConfigError("run.jobs", f"must be >= 1, got {jobs}")
        grid = data.get("eta_max_grid")
        if grid is not None:
            if not isinstance(grid, list) or not grid:
                raise ConfigError("run.eta_max_grid", "must be a non-empty list of numbers")
            grid = tuple(_coerce(v, float, "run.eta_max_grid") for v in grid)
            if any(v <= 0 for v in grid):
                raise ConfigError("run.eta_max_grid", "learning rates must be > 0")
        return cls(
            label=label,
            T=T,
            eval_period=eval_period,
            seeds=seeds,
            output_dir=_get(data, "output_dir", str, "run", "out"),
            jobs=jobs,
            eta_max_grid=grid,
        )

    def to_dict(self):
        doc = {
            "label": self.label,
            "T": self.T,
            "eval_period": self.eval_period,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "jobs": self.jobs,
        }
        if self.eta_max_grid is not None:
            doc["eta_max_grid"] = list(self.eta_max_grid)
        return doc


@dataclass(frozen=True)
class BoundSettings:
    f0_gap: float
    L_r: float
    sigma_sq: float
    T: Optional[int] = None
    eps: Optional[float] = None

    @classmethod
    def from_dict(cls, data):
        data = _mapping(data, "bound")
        _reject_unknown(data, ("f0_gap", "L_r", "sigma_sq", "T", "eps"), "bound")
        settings = cls(
            f0_gap=_get(data, "f0_gap", float, "bound"),
            L_r=_get(data, "L_r", float, "bound"),
            sigma_sq=_get(data, "sigma_sq", float, "bound"),
            T=_get(data, "T", int, "bound", None),
            eps=_get(data, "eps", float, "bound", None),
        )
        if settings.f0_gap < 0:
            raise ConfigError("bound.f0_gap", "must be >= 0")
        if settings.L_r <= 0:
            raise ConfigError("bound.L_r", "must be > 0")
        if settings.sigma_sq < 0:
            raise ConfigError("bound.sigma_sq", "must be >= 0")
        if settings.T is not None and settings.T < 1:
            raise ConfigError("bound.T", "must be >= 1")
        if settings.eps is not None and settings.eps <= 0:
            raise ConfigError("bound.eps", "must be > 0")
        return settings

    def to_dict(self):
        doc = {"f0_gap": self.f0_gap, "L_r": self.L_r, "sigma_sq": self.sigma_sq}
        if self.T is not None:
            doc["T"] = self.T
        if self.eps is not None:
            doc["eps"] = self.eps
        return doc


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed experiment document.

    ``problem`` and ``run`` may be absent for analysis-only documents and
    ``bound`` is only read by ``analyze``.
    """

    lr: LrSchedule
    bs: BatchSchedule
    problem: Optional[ProblemConfig] = None
    run: Optional[RunSettings] = None
    bound: Optional[BoundSettings] = None

    @classmethod
    def from_dict(cls, data):
        data = _mapping(data, "config")
        _reject_unknown(data, ("problem", "lr", "bs", "run", "bound"), "config")
        for section in ("lr", "bs"):
            if section not in data:
                raise ConfigError(section, "required")
        config = cls(
            lr=_schedule(data["lr"], "lr", LrSchedule, LR_KEYS),
            bs=_schedule(data["bs"], "bs", BatchSchedule, BS_KEYS),
            problem=ProblemConfig.from_dict(data["problem"]) if "problem" in data else None,
            run=RunSettings.from_dict(data["run"]) if "run" in data else None,
            bound=BoundSettings.from_dict(data["bound"]) if "bound" in data else None,
        )
        config.check_schedules()
        return config

    def to_dict(self):
        doc = {}
        if self.problem is not None:
            doc["problem"] = self.problem.to_dict()
        doc["lr"] = self.lr.to_dict()
        doc["bs"] = self.bs.to_dict()
        if self.run is not None:
            doc["run"] = self.run.to_dict()
        if self.bound is not None:
            doc["bound"] = self.bound.to_dict()
        return doc

    def horizon(self):
        if self.bound is not None and self.bound.T is not None:
            return self.bound.T
        if self.run is not None:
            return self.run.T
        return None

    def check_schedules(self):
        """Warm-up compatibility and horizon checks shared by every command."""
        lr_key = f"lr.{self.lr.variant.value}"
        for T, key in ((self.run and self.run.T, "run.T"), (self.bound and self.bound.T, "bound.T")):
            if not T:
                continue
            if self.lr.warmup_steps > T:
                raise ConfigError(key, f"warm-up length {self.lr.warmup_steps} exceeds T = {T}")
            if self.lr.is_warmup:
                report = validate_warmup(warmup_compat(self.lr, self.bs, T))
                if not report:
                    raise ConfigError(lr_key, "; ".join(report.violations))
        if self.run and self.run.eta_max_grid and self.lr.is_warmup:
            raise ConfigError("run.eta_max_grid", "warm-up schedules derive eta_max")

    def require(self, *sections):
        for section in sections:
            if getattr(self, section) is None:
                raise ConfigError(section, "section required for this command")
        return self

    def with_seeds(self, seeds):
        self.require("run")
        return dataclasses.replace(self, run=dataclasses.replace(self.run, seeds=tuple(seeds)))

    def expand(self):
        """One config per ``run.eta_max_grid`` value, labelled ``<label>-eta<value>``."""
        self.require("run")
        grid = self.run.eta_max_grid
        if not grid:
            return [self]
        out = []
        for eta in grid:
            try:
                lr = dataclasses.replace(self.lr, eta_max=eta)
            except InvalidArgumentError as exc:
                raise ConfigError("run.eta_max_grid", str(exc)) from None
            run = dataclasses.replace(self.run, label=f"{self.run.label}-eta{eta:g}", eta_max_grid=None)
            out.append(dataclasses.replace(self, lr=lr, run=run))
        return out

    def rsgd_config(self, seed):
        self.require("run")
        return RsgdConfig(T=self.run.T, lr=self.lr, bs=self.bs, seed=seed,
                          eval_period=self.run.eval_period)

    def bound_inputs(self):
        self.require("bound")
        T = self.horizon()
        if T is None:
            raise ConfigError("bound.T", "required when the config has no run section")
        return BoundInputs(
            f0_gap=self.bound.f0_gap,
            L_r=self.bound.L_r,
            sigma_sq=self.bound.sigma_sq,
            lr=self.lr,
            bs=self.bs,
            T=T,
        )


def load_config(path):
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    config = ExperimentConfig.from_dict(data)
    log.info("loaded config %s", path)
    return config
