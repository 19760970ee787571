"""Run and compare experiments described by ``ExperimentConfig`` documents.

Seeds of one configuration may run on a thread pool; every file is written
afterwards by the calling thread in submission order.
"""

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .data import save_problem, write_run_csv, write_summary
from .errors import ConfigError
from .optimizer import run
from .problems import LrmcProblem, PcaProblem, subspace_distance

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentResult",
    "Frontier",
    "ComparisonReport",
    "generate_dataset",
    "run_experiment",
    "seed_frontier",
    "compare_experiments",
]

FRONTIER_FIELDS = ("iter", "sfo_cum", "mean_grad_norm_sq", "running_min")


@dataclass
class ExperimentResult:
    records: list = field(default_factory=list)
    csv_paths: List[Path] = field(default_factory=list)
    summary_path: Optional[Path] = None
    summary: dict = field(default_factory=dict)


def generate_dataset(config, output_dir):
    """Writes the dataset of ``config.problem`` plus its spec as ``dataset.json``."""
    config.require("problem")
    problem = config.problem.build()
    output_dir = Path(output_dir)
    paths = save_problem(problem, output_dir)
    spec_path = output_dir / "dataset.json"
    with open(spec_path, "w") as f:
        json.dump(config.problem.to_dict(), f, indent=2)
        f.write("\n")
    return [*paths, spec_path]


def _evaluation(problem, record):
    """Reference distances of a finished run, when a reference is known."""
    x = record.final_point
    if isinstance(problem, PcaProblem):
        evd = problem.evd_solution()
        return {
            "evd_distance": subspace_distance(x, evd.basis),
            "evd_loss_gap": record.final_loss - problem.loss(evd.basis),
            "evd_degenerate": evd.degenerate,
        }
    if isinstance(problem, LrmcProblem) and problem.ground_truth is not None:
        if problem.ground_truth.shape == x.shape:
            return {"truth_distance": subspace_distance(x, problem.ground_truth)}
    return {}


def _run_all(problem, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [run(problem, cfg, label) for cfg, label in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run, problem, cfg, label) for cfg, label in tasks]
        return [f.result() for f in futures]


def run_experiment(config, output_dir=None, jobs=None, problem=None):
    """Runs every seed (and every ``eta_max_grid`` value) of ``config``.

    Writes ``<label>-seed<k>.csv`` per run and ``summary.json`` into
    ``output_dir`` (``run.output_dir`` by default).
    """
    config.require("problem", "run")
    configs = config.expand()
    output_dir = Path(output_dir or config.run.output_dir)
    jobs = config.run.jobs if jobs is None else int(jobs)
    if problem is None:
        problem = config.problem.build()

    tasks = [
        (cfg.rsgd_config(seed), f"{cfg.run.label}-seed{seed}")
        for cfg in configs
        for seed in cfg.run.seeds
    ]
    log.info("running %d task(s) of %s with %d job(s)", len(tasks), config.run.label, jobs)
    records = _run_all(problem, tasks, jobs)

    result = ExperimentResult(records=records)
    extras = {}
    for record in records:
        result.csv_paths.append(write_run_csv(record, output_dir / f"{record.label}.csv"))
        extras[record.label] = _evaluation(problem, record)
    result.summary_path = write_summary(records, output_dir / "summary.json", extras=extras)
    with open(result.summary_path) as f:
        result.summary = json.load(f)
    return result


@dataclass
class Frontier:
    """Seed-averaged grad-norm^2 of one configuration against cumulative SFO."""

    label: str
    iters: np.ndarray
    sfo_cum: np.ndarray
    mean_grad_norm_sq: np.ndarray
    total_sfo: int

    @property
    def running_min(self):
        return np.minimum.accumulate(self.mean_grad_norm_sq)

    @property
    def min_grad_norm_sq(self):
        return float(np.min(self.mean_grad_norm_sq))

    def sfo_to_eps(self, eps):
        """SFO spent when the running minimum first drops to eps^2, else None."""
        hit = np.flatnonzero(self.mean_grad_norm_sq <= eps * eps)
        return int(self.sfo_cum[hit[0]]) if hit.size else None

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=FRONTIER_FIELDS, lineterminator="\n")
            writer.writeheader()
            for t, s, g, m in zip(self.iters, self.sfo_cum, self.mean_grad_norm_sq, self.running_min):
                writer.writerow({
                    "iter": int(t),
                    "sfo_cum": int(s),
                    "mean_grad_norm_sq": format(float(g), ".17g"),
                    "running_min": format(float(m), ".17g"),
                })
        return path


def seed_frontier(label, records):
    """Averages grad-norm^2 across seeds at matched evaluation indices."""
    iters = np.array([row.iter for row in records[0].rows])
    for record in records[1:]:
        if not np.array_equal(iters, [row.iter for row in record.rows]):
            raise ConfigError("run.eval_period", f"seeds of {label} evaluated at different iterations")
    sq = np.array([[row.grad_norm ** 2 for row in record.rows] for record in records])
    return Frontier(
        label=label,
        iters=iters,
        sfo_cum=np.array([row.sfo_cum for row in records[0].rows]),
        mean_grad_norm_sq=sq.mean(axis=0),
        total_sfo=records[0].total_sfo,
    )


@dataclass
class ComparisonReport:
    eps: Optional[float]
    entries: List[dict] = field(default_factory=list)
    first_to_eps: Optional[str] = None

    def to_dict(self):
        return {"eps": self.eps, "first_to_eps": self.first_to_eps, "runs": self.entries}

    def format_table(self):
        lines = [
            "| label | total_sfo | min_grad_norm_sq | sfo_to_eps |",
            "|---|---:|---:|---:|",
        ]
        for e in self.entries:
            reached = e["sfo_to_eps"]
            reached = "not reached" if reached is None else str(reached)
            if self.eps is None:
                reached = "-"
            lines.append(f"| {e['label']} | {e['total_sfo']} | {e['min_grad_norm_sq']:.6g} | {reached} |")
        return "\n".join(lines)


def compare_experiments(configs, output_dir, eps=None, jobs=None):
    """Runs matched configurations and reports their grad-norm^2 / SFO frontiers.

    Each configuration (after ``eta_max_grid`` expansion) writes its runs into
    ``output_dir/<label>/``; ``<label>-frontier.csv`` and ``compare.json`` go
    to ``output_dir``.
    """
    output_dir = Path(output_dir)
    expanded = [c for config in configs for c in config.require("problem", "run").expand()]
    labels = [c.run.label for c in expanded]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ConfigError("run.label", f"labels must be unique across configs, repeated: {duplicates}")

    problems = {}
    report = ComparisonReport(eps=eps)
    best = math.inf
    for config in expanded:
        key = json.dumps(config.problem.to_dict(), sort_keys=True)
        if key not in problems:
            problems[key] = config.problem.build()
        label = config.run.label
        result = run_experiment(config, output_dir / label, jobs=jobs, problem=problems[key])
        frontier = seed_frontier(label, result.records)
        frontier.write_csv(output_dir / f"{label}-frontier.csv")
        reached = frontier.sfo_to_eps(eps) if eps is not None else None
        report.entries.append({
            "label": label,
            "total_sfo": frontier.total_sfo,
            "min_grad_norm_sq": frontier.min_grad_norm_sq,
            "sfo_to_eps": reached,
            "seeds": list(config.run.seeds),
        })
        if reached is not None and reached < best:
            best, report.first_to_eps = reached, label

    with open(output_dir / "compare.json", "w") as f:
        json.dump(report.to_dict(), f, indent=2)
        f.write("\n")
    return report
