"""Static figures of telemetry CSVs, rendered off-screen with Agg."""

import logging
from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg as FigureCanvas
from matplotlib.figure import Figure

from .data import read_run_csv
from .errors import InvalidArgumentError

log = logging.getLogger(__name__)

__all__ = ["X_AXES", "Y_AXES", "TelemetryFigure", "plot_runs"]

X_AXES = {"iter": "Iteration", "sfo_cum": "SFO complexity"}
Y_AXES = {"grad_norm": "Norm of the gradient", "loss": "Objective value"}


class TelemetryFigure:
    """One axes of curves, one curve per telemetry file."""

    def __init__(self, figsize=(8, 6)):
        self.figure = Figure(figsize=figsize, facecolor='black')
        self.canvas = FigureCanvas(self.figure)
        self.colors = ['cyan', 'magenta', 'yellow', 'lime']

    def draw_curves(self, series, x="iter", y="grad_norm", log_y=True):
        """Draws ``series``, a list of (label, rows) pairs."""
        if x not in X_AXES:
            raise InvalidArgumentError(f"x axis must be one of {sorted(X_AXES)}, got {x!r}")
        if y not in Y_AXES:
            raise InvalidArgumentError(f"y axis must be one of {sorted(Y_AXES)}, got {y!r}")
        self.figure.clear()
        ax = self.figure.add_subplot(111, facecolor='black')

        for k, (label, rows) in enumerate(series):
            color = self.colors[k % len(self.colors)]
            xs = np.array([getattr(row, x) for row in rows], dtype=float)
            ys = np.array([getattr(row, y) for row in rows], dtype=float)
            ax.plot(xs, ys, color=color, linewidth=1.5, label=label)

        if log_y:
            ax.set_yscale('log')
        ax.set_xlabel(X_AXES[x], color='white')
        ax.set_ylabel(Y_AXES[y], color='white')
        ax.set_title(f"{Y_AXES[y]} versus {X_AXES[x]}", color='white')
        ax.tick_params(colors='white')
        if series:
            ax.legend(facecolor='black', labelcolor='white', edgecolor='white')

        for spine in ax.spines.values():
            spine.set_color('white')
        return ax

    def save(self, path, dpi=120):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.canvas.draw()
        self.figure.savefig(path, dpi=dpi, facecolor=self.figure.get_facecolor())
        return path


def plot_runs(csv_paths, out_path, x="iter", y="grad_norm", log_y=True):
    """Renders telemetry CSVs into one PNG; labels are the file stems."""
    if not csv_paths:
        raise InvalidArgumentError("nothing to plot")
    series = [(Path(p).stem, read_run_csv(p)) for p in csv_paths]
    fig = TelemetryFigure()
    fig.draw_curves(series, x=x, y=y, log_y=log_y)
    path = fig.save(out_path)
    log.info("wrote %s (%d curves)", path, len(series))
    return path
