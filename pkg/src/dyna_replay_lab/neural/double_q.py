import logging

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.neural.adam import AdamState, adam_step
from dyna_replay_lab.neural.mlp import Mlp


class EmptyBatchException(GeneralException):
    pass


@dataclass
class TransitionBatch:
    """
    A mini-batch of observation transitions stacked into arrays.
    """

    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    discounts: np.ndarray
    next_observations: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions: Sequence[Transition]) -> "TransitionBatch":
        if len(transitions) == 0:
            raise EmptyBatchException("Cannot build a batch from no transitions")
        return cls(
            observations=np.stack([np.asarray(t.state, dtype=float) for t in transitions]),
            actions=np.array([t.action for t in transitions], dtype=int),
            rewards=np.array([t.reward for t in transitions], dtype=float),
            discounts=np.array([t.discount for t in transitions], dtype=float),
            next_observations=np.stack([np.asarray(t.next_state, dtype=float) for t in transitions]),
        )


def double_q_targets(online: Mlp, target: Mlp, batch: TransitionBatch) -> np.ndarray:
    """
    y = r + gamma_t * Q_target(s', argmax_a Q_online(s', a)).
    """
    greedy: np.ndarray = np.argmax(online.forward(batch.next_observations), axis=1)
    bootstrap: np.ndarray = target.forward(batch.next_observations)[np.arange(len(batch)), greedy]
    return batch.rewards + batch.discounts * bootstrap


def double_q_update(
        online: Mlp,
        target: Mlp,
        batch: Union[TransitionBatch, List[Transition]],
        adam: AdamState,
) -> float:
    """
    One Adam step on the mean squared double-Q error of the taken actions.

    :param online: network being trained, updated in place
    :type online: Mlp
    :param target: network providing bootstrap values
    :type target: Mlp
    :param batch: non-empty mini-batch
    :type batch: TransitionBatch | List[Transition]
    :param adam: optimizer state of ``online``
    :type adam: AdamState
    :raises EmptyBatchException:
    :return: mean batch loss before the step
    :rtype: float
    """
    if not isinstance(batch, TransitionBatch):
        batch = TransitionBatch.from_transitions(batch)
    if len(batch) == 0:
        raise EmptyBatchException("double_q_update needs a non-empty batch")

    targets: np.ndarray = double_q_targets(online, target, batch)
    rows: np.ndarray = np.arange(len(batch))
    q_values: np.ndarray = online.forward(batch.observations)
    errors: np.ndarray = q_values[rows, batch.actions] - targets
    loss: float = float(np.mean(errors ** 2))

    cotangent: np.ndarray = np.zeros_like(q_values)
    cotangent[rows, batch.actions] = 2.0 * errors / len(batch)
    adam_step(adam, online.parameters, online.gradients(batch.observations, cotangent))
    logging.debug(f"double_q_update loss : {loss}")
    return loss
