"""
Figures of the power manifold, clusters, and evaluation trends. Each figure is saved as SVG next to
a CSV file with the exact plotted series.
"""
import logging
import matplotlib
import matplotlib.figure
import numpy as np
import os
import pandas as pd
from .features import write_frame


LOGGER = logging.getLogger(__name__)
KINDS = ("manifold", "cluster", "trend", "cost")
AXES = {
    "manifold": ("scaled_weight", "pc_1", "power"),
    "cluster": ("scaled_weight", "pc_1", "cluster"),
    "trend": ("train_fraction", None, "label"),
    "cost": ("call_count", None, "label"),
}
RC_PARAMS = {
    "svg.hashsalt": "powersurrogate",
    "svg.fonttype": "none",
}


def make_series(kind: str, data: pd.DataFrame, metric: str = "f1",
                assignments: np.ndarray = None) -> pd.DataFrame:
    """
    Select the plotted series for a kind of figure.

    Args:
        kind: One of :data:`KINDS`.
        data: Dataset with `scaled_weight`, `pc_1`, and `power` columns for :code:`manifold` and
            :code:`cluster` figures, or a table of evaluation reports with `label`,
            `train_fraction`, `call_count`, and metric columns for :code:`trend` and :code:`cost`
            figures.
        metric: Metric on the vertical axis of :code:`trend` and :code:`cost` figures.
        assignments: Cluster assignment of each dataset row for :code:`cluster` figures.

    Returns:
        series: Frame whose columns are the horizontal, vertical, and color coordinates.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind}; choose one of {KINDS}")
    x, y, color = AXES[kind]
    y = y or metric
    if kind == "cluster":
        if assignments is None:
            raise ValueError("cluster figures require cluster assignments")
        data = data.assign(cluster=np.asarray(assignments, dtype=int))
    if data.empty:
        return pd.DataFrame(columns=[x, y, color])
    if kind in {"trend", "cost"} and "label" not in data:
        data = data.assign(label="")
    series = data[[x, y, color]]
    if kind in {"trend", "cost"}:
        series = series.sort_values([color, x], kind="stable")
    return series.reset_index(drop=True)


def plot_series(series: pd.DataFrame, kind: str) -> matplotlib.figure.Figure:
    """
    Draw a scatter of the manifold or clusters, or lines of a metric by label.
    """
    x, y, color = series.columns
    fig = matplotlib.figure.Figure()
    ax = fig.add_subplot()
    if kind in {"manifold", "cluster"}:
        cmap = "viridis" if kind == "manifold" else "tab10"
        mappable = ax.scatter(series[x], series[y], c=series[color].to_numpy(dtype=float),
                              cmap=cmap, s=8)
        if len(series):
            fig.colorbar(mappable, ax=ax, label=color)
    else:
        for label, subset in series.groupby(color, sort=True):
            ax.plot(subset[x], subset[y], marker="o", label=label or None)
        if series[color].astype(bool).any():
            ax.legend()
    ax.set_xlabel(x.replace("_", " "))
    ax.set_ylabel(y.replace("_", " "))
    return fig


def save_plot(series: pd.DataFrame, kind: str, output: str) -> tuple[str, str]:
    """
    Save a figure as SVG and its series as CSV with the same stem.

    Returns:
        paths: Paths of the SVG and CSV files.
    """
    csv_path = os.path.splitext(output)[0] + ".csv"
    with matplotlib.rc_context(RC_PARAMS):
        fig = plot_series(series, kind)
        os.makedirs(os.path.dirname(output) or ".", exist_ok=True)
        fig.savefig(output, format="svg", metadata={"Date": None})
    LOGGER.info("saved %s figure to %s", kind, output)
    write_frame(series, csv_path)
    return output, csv_path
