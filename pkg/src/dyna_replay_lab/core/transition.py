from dataclasses import dataclass
from typing import Any, Tuple


@dataclass(frozen=True)
class Transition:
    """
    One experience tuple (s, a, r, gamma, s'). The same type carries real
    transitions from an environment, transitions replayed from a buffer and
    imagined transitions produced by a model.

    :param state: the state the action was taken in; a GridState, a state
        index or an observation vector depending on the producer
    :type state: Any
    :param action: action index
    :type action: int
    :param reward: reward received on the transition
    :type reward: float
    :param discount: per-transition discount; 0 iff the transition is terminal
    :type discount: float
    :param next_state: successor state, same kind as ``state``
    :type next_state: Any
    """

    state: Any
    action: int
    reward: float
    discount: float
    next_state: Any

    @property
    def is_terminal(self) -> bool:
        return self.discount == 0.0

    def key(self) -> Tuple[Any, int, float, float, Any]:
        """
        Hashable identity of the transition, for counting.

        :return: (s, a, r, gamma, s')
        :rtype: tuple
        """
        return self.state, self.action, self.reward, self.discount, self.next_state
