"""Datasets, loaders and run persistence.

Synthetic generators mimic the shapes of the benchmark datasets at desk
scale; file loaders read generic dense CSV and ``row,col,value`` triplet
files. Every float written to disk uses 17 significant digits, so a file
read back reproduces the values exactly.
"""

import csv
import enum
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DataFormatError,
    DuplicateEntryWarning,
    InvalidArgumentError,
    SparseMaskWarning,
)
from .manifold import Manifold
from .optimizer import TelemetryRow
from .problems import LrmcProblem, PcaProblem, SqrtAbsSphereProblem

log = logging.getLogger(__name__)

__all__ = [
    "DatasetKind",
    "DatasetSpec",
    "RUN_FIELDS",
    "generate",
    "load_dense_csv",
    "load_triplets",
    "normalize_minmax",
    "save_problem",
    "write_run_csv",
    "read_run_csv",
    "summary_entry",
    "write_summary",
]

RUN_FIELDS = ("iter", "batch_size", "lr", "sfo_cum", "grad_norm", "loss", "wall_ms")
_INT_FIELDS = ("iter", "batch_size", "sfo_cum")
CSV_PROBLEMS = ("pca", "sqrt_abs")


class DatasetKind(str, enum.Enum):
    SPHERE_UNIFORM = "sphere_uniform"
    GAUSSIAN_LOW_RANK = "gaussian_low_rank"
    MASKED_LOW_RANK = "masked_low_rank"
    DENSE_CSV = "dense_csv"
    TRIPLET_FILE = "triplet_file"


SYNTHETIC_KINDS = (
    DatasetKind.SPHERE_UNIFORM,
    DatasetKind.GAUSSIAN_LOW_RANK,
    DatasetKind.MASKED_LOW_RANK,
)


@dataclass(frozen=True)
class DatasetSpec:
    """Where the samples of a problem come from.

    ``N`` and ``n`` may be left at 0 for triplet files, in which case they
    are inferred from the largest indices. ``problem`` selects the objective
    a dense CSV feeds.
    """

    kind: DatasetKind
    N: int = 0
    n: int = 0
    r_true: int = 1
    noise: float = 0.0
    mask_density: float = 1.0
    seed: int = 0
    path: Optional[str] = None
    normalize: bool = False
    problem: str = "pca"

    def __post_init__(self):
        object.__setattr__(self, "kind", DatasetKind(self.kind))

    def validate(self):
        if self.kind in SYNTHETIC_KINDS:
            if self.N < 1:
                raise InvalidArgumentError(f"N must be >= 1, got {self.N}")
            if self.n < 2:
                raise InvalidArgumentError(f"n must be >= 2, got {self.n}")
            if self.kind is not DatasetKind.SPHERE_UNIFORM and not 1 <= self.r_true <= self.n:
                raise InvalidArgumentError(f"need 1 <= r_true <= n, got r_true={self.r_true}")
        elif not self.path:
            raise InvalidArgumentError(f"dataset kind {self.kind.value} needs a path")
        if not (self.noise >= 0 and math.isfinite(self.noise)):
            raise InvalidArgumentError(f"noise must be >= 0, got {self.noise}")
        if not 0 < self.mask_density <= 1:
            raise InvalidArgumentError(f"mask_density must lie in (0, 1], got {self.mask_density}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.kind is DatasetKind.DENSE_CSV and self.problem not in CSV_PROBLEMS:
            raise InvalidArgumentError(f"a dense CSV feeds one of {CSV_PROBLEMS}, got {self.problem!r}")

    def to_dict(self):
        doc = asdict(self)
        doc["kind"] = self.kind.value
        return doc


def generate(spec, r=None):
    """Builds the problem described by ``spec``; deterministic given the seed.

    Args:
        spec: a ``DatasetSpec``.
        r: target rank of PCA / LRMC problems, ``spec.r_true`` by default.
    """
    spec.validate()
    r = spec.r_true if r is None else int(r)
    rng = np.random.default_rng(int(spec.seed))
    kind = spec.kind

    if kind is DatasetKind.SPHERE_UNIFORM:
        X = rng.standard_normal((spec.N, spec.n))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        problem = SqrtAbsSphereProblem(X)
    elif kind is DatasetKind.GAUSSIAN_LOW_RANK:
        basis = Manifold.stiefel(spec.n, spec.r_true).random_point(rng)
        B = basis * np.linspace(2.0, 1.0, spec.r_true)
        G = rng.standard_normal((spec.N, spec.r_true))
        E = rng.standard_normal((spec.N, spec.n))
        problem = PcaProblem(G @ B.T + spec.noise * E, r)
    elif kind is DatasetKind.MASKED_LOW_RANK:
        if spec.mask_density * spec.n < spec.r_true:
            msg = (f"mask density {spec.mask_density:g} gives {spec.mask_density * spec.n:.3g} "
                   f"expected observations per column, fewer than r_true={spec.r_true}")
            log.warning(msg)
            warnings.warn(msg, SparseMaskWarning, stacklevel=2)
        A = Manifold.stiefel(spec.n, spec.r_true).random_point(rng)
        B = rng.standard_normal((spec.N, spec.r_true))
        E = rng.standard_normal((spec.n, spec.N))
        mask = rng.random((spec.n, spec.N)) < spec.mask_density
        problem = LrmcProblem(A @ B.T + spec.noise * E, mask, r, ground_truth=A)
    elif kind is DatasetKind.DENSE_CSV:
        X = load_dense_csv(spec.path)
        if spec.normalize:
            X = normalize_minmax(X)
        if spec.problem == "sqrt_abs":
            norms = np.linalg.norm(X, axis=1, keepdims=True)
            if np.any(norms == 0):
                raise InvalidArgumentError(f"{spec.path}: zero rows cannot be put on the sphere")
            problem = SqrtAbsSphereProblem(X / norms)
        else:
            problem = PcaProblem(X, r)
    else:
        problem = load_triplets(spec.path, n=spec.n or None, N=spec.N or None, r=r,
                                normalize=spec.normalize)

    log.info("generated %s dataset: %r", kind.value, problem)
    return problem


def _float(text, path, line, what="value"):
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(path, line, f"cannot parse {what} {text!r}") from None
    if not math.isfinite(value):
        raise DataFormatError(path, line, f"non-finite {what} {text!r}")
    return value


def _index(text, path, line, what):
    try:
        value = int(text.strip())
    except ValueError:
        raise DataFormatError(path, line, f"cannot parse {what} index {text!r}") from None
    if value < 0:
        raise DataFormatError(path, line, f"negative {what} index {value}")
    return value


def _rows(path):
    with open(path, "r", newline="") as f:
        for lineno, fields in enumerate(csv.reader(f), start=1):
            if fields and any(x.strip() for x in fields):
                yield lineno, fields


def load_dense_csv(path):
    """Reads one sample per line of comma-separated reals into an N x n matrix."""
    rows = []
    width = None
    for lineno, fields in _rows(path):
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DataFormatError(path, lineno, f"expected {width} values, found {len(fields)}")
        rows.append([_float(x, path, lineno) for x in fields])
    if not rows:
        raise InvalidArgumentError(f"{path}: no samples")
    return np.array(rows, dtype=float)


def normalize_minmax(values):
    """Affine map of ``values`` onto [0, 1]; a constant input maps to 0."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        log.info("min-max normalization of a constant array")
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def load_triplets(path, n=None, N=None, r=1, normalize=False, ground_truth=None):
    """Reads ``row,col,value`` lines into an ``LrmcProblem``.

    Repeated (row, col) pairs keep the last value and raise a
    ``DuplicateEntryWarning``. ``n`` and ``N`` default to the largest
    indices plus one.
    """
    entries = {}
    duplicates = 0
    for lineno, fields in _rows(path):
        if len(fields) != 3:
            raise DataFormatError(path, lineno, f"expected row,col,value, found {len(fields)} fields")
        i = _index(fields[0], path, lineno, "row")
        j = _index(fields[1], path, lineno, "column")
        if (n is not None and i >= n) or (N is not None and j >= N):
            raise DataFormatError(path, lineno, f"entry ({i},{j}) outside a {n}x{N} matrix")
        if (i, j) in entries:
            duplicates += 1
        entries[i, j] = _float(fields[2], path, lineno)
    if not entries:
        raise InvalidArgumentError(f"{path}: no entries")
    if duplicates:
        msg = f"{path}: {duplicates} duplicate entries, keeping the last value of each"
        log.warning(msg)
        warnings.warn(msg, DuplicateEntryWarning, stacklevel=2)

    keys = list(entries)
    n = n if n is not None else max(i for i, _ in keys) + 1
    N = N if N is not None else max(j for _, j in keys) + 1
    values = np.array([entries[k] for k in keys])
    if normalize:
        values = normalize_minmax(values)
    triplets = [(i, j, v) for (i, j), v in zip(keys, values)]
    return LrmcProblem.from_entries(triplets, n, N, r, ground_truth=ground_truth)


def _fmt(value):
    return format(float(value), ".17g")


def _write_matrix(path, matrix):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            writer.writerow([_fmt(v) for v in row])


def save_problem(problem, directory):
    """Serializes the samples of ``problem``; returns the written paths.

    PCA and sqrt-abs problems give ``samples.csv``; LRMC gives
    ``entries.csv`` (row,col,value) and ``ground_truth.csv`` when a planted
    subspace is known.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if isinstance(problem, LrmcProblem):
        path = directory / "entries.csv"
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            for i, j, v in problem.entries():
                writer.writerow([i, j, _fmt(v)])
        paths = [path]
        if problem.ground_truth is not None:
            paths.append(directory / "ground_truth.csv")
            _write_matrix(paths[-1], problem.ground_truth)
        return paths
    path = directory / "samples.csv"
    _write_matrix(path, problem.X)
    return [path]


def write_run_csv(record, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RUN_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in record.rows:
            writer.writerow({
                key: (str(getattr(row, key)) if key in _INT_FIELDS else _fmt(getattr(row, key)))
                for key in RUN_FIELDS
            })
    return path


def read_run_csv(path):
    """Parses a telemetry CSV back into ``TelemetryRow`` objects."""
    rows = []
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != RUN_FIELDS:
            raise DataFormatError(path, 1, f"expected header {','.join(RUN_FIELDS)}")
        for lineno, fields in enumerate(reader, start=2):
            if len(fields) != len(RUN_FIELDS):
                raise DataFormatError(path, lineno, f"expected {len(RUN_FIELDS)} fields")
            values = {}
            for key, text in zip(RUN_FIELDS, fields):
                if key in _INT_FIELDS:
                    values[key] = _index(text, path, lineno, key)
                else:
                    values[key] = _float(text, path, lineno, key)
            rows.append(TelemetryRow(**values))
    return rows


def _finite(value):
    """JSON has no inf or nan; they are written as null."""
    return value if value is not None and math.isfinite(value) else None


def summary_entry(record):
    last = record.rows[-1] if record.rows else None
    return {
        "seed": record.seed,
        "min_grad_norm_sq": _finite(record.min_grad_norm_sq),
        "total_sfo": record.total_sfo,
        "final_loss": _finite(record.final_loss),
        "final_grad_norm": _finite(last.grad_norm) if last else None,
        "evaluations": len(record.rows),
    }


def write_summary(records, path, extras=None):
    """Writes a JSON summary keyed by run label.

    ``extras`` maps a label to additional fields of that entry.
    """
    extras = extras or {}
    doc = {}
    for record in records:
        if record.label in doc:
            raise InvalidArgumentError(f"duplicate run label {record.label!r}")
        doc[record.label] = {**summary_entry(record), **extras.get(record.label, {})}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, allow_nan=False)
        f.write("\n")
    return path
