import logging

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from dyna_replay_lab.envs.mrp import MrpSpec, stationary_distribution
from dyna_replay_lab.stability.linear_td import (
    InvalidParameterException,
    Verdict,
    iterate_expected_td,
    key_matrix,
    stability_verdict,
    two_state_mrp,
)


@dataclass
class RegionSweep:
    """
    Stability of expected TD on the two-state MRP over a grid of sampling
    probabilities d1 (rows) and transition probabilities p (columns).
    """

    d1_values: np.ndarray
    p_values: np.ndarray
    discount: float
    step_size: float
    key: np.ndarray
    verdicts: List[List[Verdict]]
    td_diverged: Optional[np.ndarray] = None

    @property
    def divergent(self) -> np.ndarray:
        return np.array([[v is Verdict.DIVERGENT for v in row] for row in self.verdicts])

    def rows(self) -> List[Dict[str, object]]:
        """
        One record per cell: d1, p, A, verdict.
        """
        return [
            {"d1": float(d1), "p": float(p), "A": float(self.key[i, j]), "verdict": self.verdicts[i][j].value}
            for i, d1 in enumerate(self.d1_values)
            for j, p in enumerate(self.p_values)
        ]


def divergence_region_sweep(
        discount: float = 0.99,
        d1_resolution: int = 101,
        p_resolution: int = 101,
        step_size: float = 0.01,
        td_steps: int = 0,
) -> RegionSweep:
    """
    Builds the key matrix of every (d1, p) cell and its stability verdict.
    With ``td_steps`` > 0 every cell is also iterated from w0 = 1 and the
    divergence flags are kept for comparison.

    :raises InvalidParameterException: for a resolution below 2
    """
    if d1_resolution < 2 or p_resolution < 2:
        raise InvalidParameterException(
            f"Grid resolutions must be at least 2 : {d1_resolution}, {p_resolution}"
        )
    d1_values: np.ndarray = np.linspace(0.0, 1.0, d1_resolution)
    p_values: np.ndarray = np.linspace(0.0, 1.0, p_resolution)
    key: np.ndarray = np.empty((d1_resolution, p_resolution))
    verdicts: List[List[Verdict]] = []
    for i, d1 in enumerate(d1_values):
        row: List[Verdict] = []
        for j, p in enumerate(p_values):
            a, _ = key_matrix(two_state_mrp(d1, p, discount))
            key[i, j] = a[0, 0]
            row.append(stability_verdict(a, step_size).verdict)
        verdicts.append(row)

    sweep = RegionSweep(
        d1_values=d1_values,
        p_values=p_values,
        discount=discount,
        step_size=step_size,
        key=key,
        verdicts=verdicts,
    )
    if td_steps > 0:
        cells: int = key.size
        result = iterate_expected_td(
            key.reshape(cells, 1, 1), np.zeros((cells, 1)), np.ones((cells, 1)),
            step_size, steps=td_steps, record_trajectory=False,
        )
        sweep.td_diverged = result.diverged.reshape(key.shape)
    logging.info(f"region sweep : {int(sweep.divergent.sum())} of {key.size} cells divergent")
    return sweep


@dataclass
class LikelihoodCurve:
    sample_sizes: List[int]
    likelihoods: np.ndarray
    standard_errors: np.ndarray
    trials: int


def empirical_divergence_likelihood(
        rng: np.random.Generator,
        transition_probability: float = 0.5,
        sample_sizes: Sequence[int] = (1, 10, 100, 1000),
        trials: int = 10_000,
        discount: float = 0.99,
        step_size: float = 0.01,
) -> LikelihoodCurve:
    """
    For every N draws ``trials`` empirical sampling distributions from N i.i.d.
    states of the chain's stationary distribution and reports the fraction
    for which expected TD with the perfect transition model diverges.

    :raises InvalidParameterException: for trials < 1 or a sample size < 1
    """
    if trials < 1:
        raise InvalidParameterException(f"trials must be at least 1 : {trials}")
    if any(n < 1 for n in sample_sizes):
        raise InvalidParameterException(f"Sample sizes must be positive : {list(sample_sizes)}")

    stationary_first: float = float(stationary_distribution(MrpSpec(transition_probability, discount))[0])
    likelihoods: List[float] = []
    for n in sample_sizes:
        counts: np.ndarray = rng.binomial(n, stationary_first, size=trials)
        divergent: Dict[int, bool] = {}
        for count in np.unique(counts):
            a, _ = key_matrix(two_state_mrp(count / n, transition_probability, discount))
            divergent[int(count)] = stability_verdict(a, step_size).verdict is Verdict.DIVERGENT
        likelihood: float = float(np.mean([divergent[int(c)] for c in counts]))
        likelihoods.append(likelihood)
        logging.debug(f"N = {n} : divergence likelihood {likelihood}")

    values: np.ndarray = np.array(likelihoods)
    return LikelihoodCurve(
        sample_sizes=[int(n) for n in sample_sizes],
        likelihoods=values,
        standard_errors=np.sqrt(values * (1.0 - values) / trials),
        trials=trials,
    )
