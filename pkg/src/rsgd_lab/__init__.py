"""
rsgd-lab - Riemannian stochastic gradient descent with learning-rate and
batch-size schedules.

This package provides:
- Sphere, Stiefel and Grassmann geometry with QR / normalization retractions
- Constant, diminishing, cosine, polynomial-decay and warm-up learning rates
- Constant, exponential-growth and polynomial-growth batch sizes
- PCA, low-rank matrix completion and sqrt-abs benchmark objectives
- Evaluable convergence bounds, SFO complexities and critical batch sizes
- A command-line harness writing reproducible CSV telemetry
"""

__version__ = "1.0.0"
__author__ = "rsgd-lab developers"
__license__ = "MIT"

from .analysis import (
    BoundCase,
    BoundInputs,
    critical_batch,
    lemma1_bound,
    sfo_constant,
    sfo_eps_increasing,
    sfo_increasing,
    theorem_bound,
    tradeoff_curves,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DivergedError,
    InfeasibleBudgetError,
    InvalidArgumentError,
    NondifferentiablePointError,
    NumericalDegeneracyError,
    RsgdLabError,
)
from .manifold import Manifold, ManifoldKind
from .optimizer import RsgdConfig, RunRecord, TelemetryRow, run
from .problems import LrmcProblem, PcaProblem, SqrtAbsSphereProblem
from .schedule import BatchSchedule, BsVariant, LrSchedule, LrVariant, bs_at, lr_at

__all__ = [
    "Manifold",
    "ManifoldKind",
    "LrSchedule",
    "LrVariant",
    "BatchSchedule",
    "BsVariant",
    "lr_at",
    "bs_at",
    "RsgdConfig",
    "RunRecord",
    "TelemetryRow",
    "run",
    "PcaProblem",
    "LrmcProblem",
    "SqrtAbsSphereProblem",
    "BoundInputs",
    "BoundCase",
    "lemma1_bound",
    "theorem_bound",
    "sfo_constant",
    "critical_batch",
    "sfo_increasing",
    "sfo_eps_increasing",
    "tradeoff_curves",
    "RsgdLabError",
    "InvalidArgumentError",
    "NumericalDegeneracyError",
    "NondifferentiablePointError",
    "DivergedError",
    "InfeasibleBudgetError",
    "ConfigError",
    "DataFormatError",
    "main",
]


def main(argv=None):
    """
    Main entry point for the rsgd-lab command line.

    Can be called from command line via: rsgd-lab or python -m rsgd_lab
    """
    from .cli import main as cli_main

    return cli_main(argv)
