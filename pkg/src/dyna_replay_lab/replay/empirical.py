from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Tuple

import numpy as np

from dyna_replay_lab.replay.buffer import EmptyBufferException, ReplayBuffer


@dataclass
class EmpiricalModel:
    """
    The model a replay buffer implicitly defines: counts n(s), n(s, a) and
    n(s, s') over the stored transitions and the distributions built from them.

    Arrays are indexed by position in ``states`` (every state seen as a source
    or a successor, sorted). Columns of states never seen as a source are
    zero: such states are outside the support of the sampling distribution.
    """

    states: List[Hashable]
    state_counts: Counter
    pair_counts: Counter
    transition_counts: Counter
    # sum of gamma_t / discount per (s, s'): terminal transitions contribute 0
    continuation_weights: Dict[Tuple[Hashable, Hashable], float]
    reward_sums: Dict[Hashable, float]
    total: int
    discount: float
    _positions: Dict[Hashable, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._positions = {s: i for i, s in enumerate(self.states)}

    def position(self, state: Hashable) -> int:
        return self._positions[state]

    def empirical_policy(self, state: Hashable, action: int) -> float:
        """
        pi~(a|s) = n(s, a) / n(s); zero for states never seen as a source.
        """
        n_s: int = self.state_counts.get(state, 0)
        if n_s == 0:
            return 0.0
        return self.pair_counts.get((state, action), 0) / n_s

    @property
    def empirical_dynamics(self) -> np.ndarray:
        """
        Column-stochastic P~ with [P~]_{s', s} = n(s, s') / n(s).
        """
        n: int = len(self.states)
        dynamics: np.ndarray = np.zeros((n, n))
        for (s, s_next), count in self.transition_counts.items():
            dynamics[self._positions[s_next], self._positions[s]] = count / self.state_counts[s]
        return dynamics

    @property
    def continuation_dynamics(self) -> np.ndarray:
        """
        P~ with each transition weighted by gamma_t / gamma, so columns sum to
        less than one where episodes terminate.
        """
        n: int = len(self.states)
        dynamics: np.ndarray = np.zeros((n, n))
        for (s, s_next), weight in self.continuation_weights.items():
            dynamics[self._positions[s_next], self._positions[s]] = weight / self.state_counts[s]
        return dynamics

    @property
    def sampling_distribution(self) -> np.ndarray:
        """
        Diagonal of D~: n(s) / N.
        """
        return np.array([self.state_counts.get(s, 0) / self.total for s in self.states])

    @property
    def empirical_sampling(self) -> np.ndarray:
        return np.diag(self.sampling_distribution)

    @property
    def expected_rewards(self) -> np.ndarray:
        """
        Mean reward per source state (zero outside the support).
        """
        return np.array(
            [self.reward_sums.get(s, 0.0) / self.state_counts[s] if self.state_counts.get(s) else 0.0
             for s in self.states]
        )


def build_empirical_model(buffer: ReplayBuffer) -> EmpiricalModel:
    """
    Counts the buffer's transitions into an EmpiricalModel.

    :param buffer: a non-empty buffer with hashable states
    :type buffer: ReplayBuffer
    :raises EmptyBufferException:
    :return:
    :rtype: EmpiricalModel
    """
    if len(buffer) == 0:
        raise EmptyBufferException("Cannot build an empirical model from an empty buffer")

    state_counts: Counter = Counter()
    pair_counts: Counter = Counter()
    transition_counts: Counter = Counter()
    reward_sums: Dict[Hashable, float] = {}
    seen: set = set()
    discount: float = max(t.discount for t in buffer)

    continuation: Dict[Tuple[Hashable, Hashable], float] = {}
    for t in buffer:
        state_counts[t.state] += 1
        pair_counts[(t.state, t.action)] += 1
        transition_counts[(t.state, t.next_state)] += 1
        reward_sums[t.state] = reward_sums.get(t.state, 0.0) + t.reward
        if discount > 0.0:
            key = (t.state, t.next_state)
            continuation[key] = continuation.get(key, 0.0) + t.discount / discount
        seen.add(t.state)
        seen.add(t.next_state)

    return EmpiricalModel(
        states=sorted(seen),
        state_counts=state_counts,
        pair_counts=pair_counts,
        transition_counts=transition_counts,
        continuation_weights=continuation,
        reward_sums=reward_sums,
        total=len(buffer),
        discount=discount,
    )
