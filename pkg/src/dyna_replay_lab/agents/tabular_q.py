from dataclasses import dataclass

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition


@dataclass
class TabularQ:
    """
    Action-value table Q(s, a) with its step size and exploration rate.

    :param values: array of shape (num_states, num_actions)
    :type values: np.ndarray
    :param step_size: alpha
    :type step_size: float
    :param epsilon: exploration rate of the behaviour policy
    :type epsilon: float
    """

    values: np.ndarray
    step_size: float = 0.1
    epsilon: float = 0.1

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise GeneralException(f"Q table must be 2-D ; got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise GeneralException("Q table holds non-finite values")
        if not 0.0 < self.step_size <= 1.0:
            raise GeneralException(f"step_size must be in (0, 1] : {self.step_size}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise GeneralException(f"epsilon must be in [0, 1] : {self.epsilon}")

    @classmethod
    def zeros(cls, num_states: int, num_actions: int, step_size: float = 0.1, epsilon: float = 0.1) -> "TabularQ":
        return cls(np.zeros((num_states, num_actions)), step_size=step_size, epsilon=epsilon)

    @property
    def num_states(self) -> int:
        return self.values.shape[0]

    @property
    def num_actions(self) -> int:
        return self.values.shape[1]

    def update(self, t: Transition) -> "TabularQ":
        s, a = int(t.state), int(t.action)
        target: float = t.reward + t.discount * float(self.values[int(t.next_state)].max())
        self.values[s, a] += self.step_size * (target - self.values[s, a])
        return self


def q_learning_update(q: TabularQ, t: Transition) -> TabularQ:
    """
    Q(s,a) <- Q(s,a) + alpha * (r + gamma_t * max_a' Q(s',a') - Q(s,a)).
    A terminal transition (gamma_t = 0) does not bootstrap.
    """
    return q.update(t)
