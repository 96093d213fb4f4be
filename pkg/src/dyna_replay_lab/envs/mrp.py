from dataclasses import dataclass
from typing import Tuple

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException


FEATURES: Tuple[float, float] = (1.0, 2.0)  # x(s) = s


class InvalidMrpException(GeneralException):
    pass


@dataclass(frozen=True)
class MrpSpec:
    """
    Two-state Markov reward process: from either state the next state is
    state 1 with probability ``transition_probability`` and state 2 otherwise.
    All rewards are 0 and each state has the single feature x(s) = s.

    :param transition_probability: p(next = 1)
    :type transition_probability: float
    :param discount:
    :type discount: float
    """

    transition_probability: float
    discount: float = 0.99

    def __post_init__(self) -> None:
        if not 0.0 <= self.transition_probability <= 1.0:
            raise InvalidMrpException(
                f"transition_probability must lie in [0, 1] : {self.transition_probability}"
            )
        if not 0.0 <= self.discount <= 1.0:
            raise InvalidMrpException(f"discount must lie in [0, 1] : {self.discount}")

    @property
    def features(self) -> Tuple[float, float]:
        return FEATURES


def mrp_matrices(spec: MrpSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Column-stochastic dynamics ``P`` with [P]_ij = p(next = i | current = j)
    and the 2x1 feature matrix ``X``.

    :param spec:
    :type spec: MrpSpec
    :return: (P, X)
    :rtype: Tuple[np.ndarray, np.ndarray]
    """
    p: float = spec.transition_probability
    transition: np.ndarray = np.array([[p, p], [1.0 - p, 1.0 - p]])
    features: np.ndarray = np.array(FEATURES).reshape(2, 1)
    return transition, features


def stationary_distribution(spec: MrpSpec) -> np.ndarray:
    """
    The next state does not depend on the current one, so the stationary
    distribution is (p, 1 - p).
    """
    p: float = spec.transition_probability
    return np.array([p, 1.0 - p])
