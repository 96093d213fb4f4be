import logging

from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException, ShapeMismatchException
from dyna_replay_lab.core.transition import Transition


RIDGE: float = 1e-8


class SingularSystemException(GeneralException):
    pass


@dataclass
class FeatureDataset:
    """
    Transitions in feature space.

    :param features: x_t, shape (N, k)
    :param rewards: r_{t+1}, shape (N,)
    :param discounts: gamma_t, 0 on terminal transitions
    :param next_features: x_{t+1}, shape (N, k)
    :param continues: True where transition t directly follows t - 1 in the
        same episode; eligibility traces are reset elsewhere
    """

    features: np.ndarray
    rewards: np.ndarray
    discounts: np.ndarray
    next_features: np.ndarray
    continues: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.next_features = np.atleast_2d(np.asarray(self.next_features, dtype=float))
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.discounts = np.asarray(self.discounts, dtype=float)
        n: int = len(self.features)
        if n == 0:
            raise ShapeMismatchException("A dataset needs at least one transition")
        if self.next_features.shape != self.features.shape:
            raise ShapeMismatchException(
                f"next_features {self.next_features.shape} do not match features {self.features.shape}"
            )
        if self.rewards.shape != (n,) or self.discounts.shape != (n,):
            raise ShapeMismatchException(f"rewards and discounts must have length {n}")
        if self.continues is None:
            self.continues = np.zeros(n, dtype=bool)
        self.continues = np.asarray(self.continues, dtype=bool)

    def __len__(self) -> int:
        return len(self.features)

    @property
    def discount(self) -> float:
        """
        The non-terminal discount, gamma = max gamma_t.
        """
        return float(self.discounts.max())

    @classmethod
    def from_transitions(
            cls, transitions: Sequence[Transition], features: Callable[[Hashable], np.ndarray]
    ) -> "FeatureDataset":
        continues = [False] + [
            (not previous.is_terminal) and previous.next_state == current.state
            for previous, current in zip(transitions[:-1], transitions[1:])
        ]
        return cls(
            features=np.array([np.atleast_1d(features(t.state)) for t in transitions], dtype=float),
            rewards=np.array([t.reward for t in transitions]),
            discounts=np.array([t.discount for t in transitions]),
            next_features=np.array([np.atleast_1d(features(t.next_state)) for t in transitions], dtype=float),
            continues=np.array(continues),
        )


@dataclass(frozen=True)
class LinearSolution:
    weights: np.ndarray
    ridge: float


def _solve(matrix: np.ndarray, vector: np.ndarray, ridge: float) -> np.ndarray:
    if ridge == 0.0 and np.linalg.matrix_rank(matrix) < len(matrix):
        raise SingularSystemException(f"Singular {matrix.shape} system and no ridge")
    try:
        return np.linalg.solve(matrix, vector)
    except np.linalg.LinAlgError as e:
        raise SingularSystemException(f"Cannot solve {matrix.shape} system : {e}")


def lstd_solve(dataset: FeatureDataset, trace_decay: float = 0.0, ridge: float = RIDGE) -> LinearSolution:
    """
    One pass of LSTD(lambda): with traces z_t = lambda gamma_{t-1} z_{t-1} + x_t,
    A = mean z_t (x_t - gamma_t x_{t+1})^T and b = mean z_t r_{t+1};
    solves (A + ridge I) w = b.

    :param trace_decay: lambda in [0, 1]; traces only carry over contiguous
        transitions of one episode
    :raises SingularSystemException: when the system cannot be solved
    """
    x, x_next = dataset.features, dataset.next_features
    k: int = x.shape[1]
    if trace_decay == 0.0:
        traces: np.ndarray = x
    else:
        traces = np.empty_like(x)
        trace: np.ndarray = np.zeros(k)
        for t in range(len(dataset)):
            carry: float = trace_decay * dataset.discounts[t - 1] if dataset.continues[t] else 0.0
            trace = carry * trace + x[t]
            traces[t] = trace

    a: np.ndarray = traces.T @ (x - dataset.discounts[:, None] * x_next) / len(dataset)
    b: np.ndarray = traces.T @ dataset.rewards / len(dataset)
    weights: np.ndarray = _solve(a + ridge * np.eye(k), b, ridge)
    logging.debug(f"lstd({trace_decay}) over {len(dataset)} transitions, ridge {ridge}")
    return LinearSolution(weights=weights, ridge=ridge)


def fit_and_solve_linear_model(dataset: FeatureDataset, ridge: float = RIDGE) -> LinearSolution:
    """
    Fits a linear feature model by ridge regression, x_t F ~ (gamma_t / gamma)
    x_{t+1} and x_t theta ~ r_{t+1}, then solves the model's own TD fixed point
    w = theta + gamma F w.

    The ridge matches ``lstd_solve``'s: both are ``ridge`` on the
    per-transition averaged normal equations.

    :raises SingularSystemException:
    """
    x: np.ndarray = dataset.features
    n, k = x.shape
    gamma: float = dataset.discount
    if gamma > 0.0:
        continuation: np.ndarray = (dataset.discounts / gamma)[:, None] * dataset.next_features
    else:
        continuation = np.zeros_like(dataset.next_features)

    gram: np.ndarray = x.T @ x + ridge * n * np.eye(k)
    dynamics: np.ndarray = _solve(gram, x.T @ continuation, ridge)
    reward_weights: np.ndarray = _solve(gram, x.T @ dataset.rewards, ridge)
    weights: np.ndarray = _solve(np.eye(k) - gamma * dynamics, reward_weights, ridge)
    return LinearSolution(weights=weights, ridge=ridge)
