from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from dyna_replay_lab.harness.results import ExperimentException


SUMMARY_COLUMNS: Tuple[str, ...] = ("series", "x", "statistic", "lower", "upper", "n")


@dataclass(frozen=True)
class SummaryRow:
    series: Any
    x: Any
    statistic: float
    lower: float
    upper: float
    n: int

    def as_dict(self) -> Dict[str, Any]:
        return {c: getattr(self, c) for c in SUMMARY_COLUMNS}


def summarise(values: Sequence[float], statistic: str = "median", error: str = "interquartile") -> Tuple[float, float, float]:
    """
    :return: (statistic, lower, upper) of one group of seeds
    """
    data: np.ndarray = np.asarray(values, dtype=float)
    centre: float = float(np.median(data) if statistic == "median" else np.mean(data))
    if error == "interquartile":
        lower, upper = np.percentile(data, [25.0, 75.0])
        return centre, float(lower), float(upper)
    spread: float = float(np.std(data, ddof=1) / np.sqrt(len(data))) if len(data) > 1 else 0.0
    return centre, centre - spread, centre + spread


def aggregate(
        rows: Sequence[Mapping[str, Any]],
        x: str,
        y: str,
        series: Optional[str] = None,
        statistic: str = "median",
        error: str = "interquartile",
) -> List[SummaryRow]:
    """
    Groups rows by (series, x) and summarises ``y`` across the group (the
    seeds). Series keep their first-seen order; x values are sorted.

    :param statistic: median or mean
    :param error: interquartile (25th to 75th percentile) or standard-error
        (statistic plus or minus the standard error of the mean)
    :raises ExperimentException: for no rows or an unknown statistic or error
    """
    if not rows:
        raise ExperimentException("Nothing to aggregate")
    if statistic not in ("median", "mean") or error not in ("interquartile", "standard-error"):
        raise ExperimentException(f"Unknown statistic {statistic!r} or error {error!r}")

    groups: Dict[Any, Dict[Any, List[float]]] = {}
    for row in rows:
        try:
            label = row[series] if series else None
            groups.setdefault(label, {}).setdefault(row[x], []).append(float(row[y]))
        except KeyError as e:
            raise ExperimentException(f"Row {dict(row)} has no column {e}")

    summary: List[SummaryRow] = []
    for label, by_x in groups.items():
        for x_value in sorted(by_x):
            values = by_x[x_value]
            centre, lower, upper = summarise(values, statistic, error)
            summary.append(SummaryRow(label, x_value, centre, lower, upper, len(values)))
    return summary
