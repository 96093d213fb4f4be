import logging
import os
import tempfile

from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from dyna_replay_lab.core.exceptions import GeneralException  # noqa: E402
from dyna_replay_lab.harness.aggregate import SummaryRow  # noqa: E402
from dyna_replay_lab.stability.sweeps import RegionSweep  # noqa: E402


class PlotException(GeneralException):
    pass


def _save(figure: plt.Figure, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(handle)
    try:
        figure.savefig(temporary, format="svg", bbox_inches="tight")
        os.replace(temporary, path)
    finally:
        plt.close(figure)
        Path(temporary).unlink(missing_ok=True)
    logging.info(f"wrote {path}")
    return path


def _check_log_axis(summary: Sequence[SummaryRow], logx: bool, logy: bool) -> None:
    for row in summary:
        if logx and float(row.x) <= 0.0:
            raise PlotException(f"Cannot put x = {row.x} (series {row.series}) on a log axis")
        if logy and row.statistic <= 0.0:
            raise PlotException(
                f"Cannot put {row.statistic} at x = {row.x} (series {row.series}) on a log axis"
            )


def emit_svg(
        summary: Sequence[SummaryRow],
        path: Union[str, Path],
        x_label: str = "x",
        y_label: str = "y",
        logx: bool = False,
        logy: bool = False,
        title: str = "",
) -> Path:
    """
    One line per series with its error band. Lines and bands carry the ids
    ``series-<name>`` and ``band-<name>`` in the SVG.

    :raises PlotException: for an empty summary or a non-positive value on a
        log axis
    """
    if not summary:
        raise PlotException("Cannot plot an empty summary")
    _check_log_axis(summary, logx, logy)

    by_series: Dict[Any, List[SummaryRow]] = {}
    for row in summary:
        by_series.setdefault(row.series, []).append(row)

    figure, axes = plt.subplots(figsize=(6.0, 4.0))
    for label, rows in by_series.items():
        name: str = "all" if label is None else str(label)
        xs = np.array([float(r.x) for r in rows])
        centre = np.array([r.statistic for r in rows])
        lower = np.array([r.lower for r in rows])
        upper = np.array([r.upper for r in rows])
        if logy:
            # a band reaching zero is drawn from the line instead
            lower = np.where(lower > 0.0, lower, centre)
        axes.fill_between(xs, lower, upper, alpha=0.2, gid=f"band-{name}")
        axes.plot(xs, centre, marker="o", label=name, gid=f"series-{name}")
    if logx:
        axes.set_xscale("log")
    if logy:
        axes.set_yscale("log")
    axes.set_xlabel(x_label)
    axes.set_ylabel(y_label)
    if title:
        axes.set_title(title)
    if len(by_series) > 1 or None not in by_series:
        axes.legend()
    return _save(figure, path)


def emit_heatmap_svg(sweep: RegionSweep, path: Union[str, Path]) -> Path:
    """
    Divergent cells of a region sweep over (p, d1).
    """
    figure, axes = plt.subplots(figsize=(5.0, 4.5))
    image = axes.imshow(
        sweep.divergent.astype(float),
        origin="lower",
        extent=(sweep.p_values[0], sweep.p_values[-1], sweep.d1_values[0], sweep.d1_values[-1]),
        aspect="auto",
        cmap="Greys",
        vmin=0.0,
        vmax=1.0,
    )
    image.set_gid("region")
    axes.set_xlabel("p")
    axes.set_ylabel("d1")
    axes.set_title(f"divergent cells, gamma = {sweep.discount}")
    return _save(figure, path)
