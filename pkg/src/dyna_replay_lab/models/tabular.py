import logging

from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition


class ModelDirectionException(GeneralException):
    """
    Raised when a forward-only operation is applied to a backward model or
    the reverse.
    """
    pass


class ModelSupportException(GeneralException):
    """
    Raised when a reward or discount is sampled before any value is known.
    """
    pass


class ModelDirection(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


def sample_categorical(counts: np.ndarray, rng: np.random.Generator) -> int:
    """
    Draws an index with probability proportional to ``counts``.
    """
    return int(rng.choice(len(counts), p=counts / counts.sum()))


class DirichletTabularModel:
    """
    Exact Bayesian tabular model with a symmetric Dirichlet prior on every
    categorical it learns.

    A forward model learns Pr(r, gamma, s' | s, a) as three independent
    categoricals per (s, a): successor state, reward and discount. A backward
    model learns Pr(s, a | r, gamma, s') as one categorical over all (s, a)
    pairs per conditioning key. Predictive probabilities are
    (count + prior) / (total + K * prior).

    Reward and discount supports start from the values passed in and grow
    with every new observed value; the state and state-action categories
    always cover the full state set.
    """

    def __init__(
            self,
            direction: ModelDirection,
            num_states: int,
            num_actions: int,
            reward_support: Sequence[float] = (),
            discount_support: Sequence[float] = (),
            prior_concentration: float = 1.0,
    ):
        """
        :param direction: forward or backward
        :type direction: ModelDirection
        :param num_states: number of state categories K
        :type num_states: int
        :param num_actions:
        :type num_actions: int
        :param reward_support: reward values known up front
        :type reward_support: Sequence[float]
        :param discount_support: discount values known up front
        :type discount_support: Sequence[float]
        :param prior_concentration: Dirichlet pseudo-count per category
        :type prior_concentration: float
        """
        super().__init__()
        if prior_concentration <= 0.0:
            raise GeneralException(f"prior_concentration must be positive : {prior_concentration}")
        self.direction: ModelDirection = ModelDirection(direction)
        self.num_states: int = num_states
        self.num_actions: int = num_actions
        self.prior_concentration: float = prior_concentration
        self.observations: int = 0

        shape: Tuple[int, int] = (num_states, num_actions)
        if self.direction is ModelDirection.FORWARD:
            self.reward_support: List[float] = sorted(set(float(r) for r in reward_support))
            self.discount_support: List[float] = sorted(set(float(g) for g in discount_support))
            self._next_counts: np.ndarray = np.full(shape + (num_states,), prior_concentration)
            self._reward_counts: np.ndarray = np.full(shape + (len(self.reward_support),), prior_concentration)
            self._discount_counts: np.ndarray = np.full(shape + (len(self.discount_support),), prior_concentration)
            self._next_probabilities: np.ndarray = np.zeros(shape + (num_states,))
            self._mean_rewards: np.ndarray = np.zeros(shape)
            self._mean_discounts: np.ndarray = np.zeros(shape)
            # Pr(gamma != 0 | s, a)
            self._continuation: np.ndarray = np.ones(shape)
            self._refresh_tables()
        else:
            self._predecessor_counts: Dict[Tuple[float, float, int], np.ndarray] = {}

    def __repr__(self) -> str:
        return (
            f"DirichletTabularModel({self.direction.value}, states={self.num_states}, "
            f"actions={self.num_actions}, observations={self.observations})"
        )

    def _require(self, direction: ModelDirection) -> None:
        if self.direction is not direction:
            raise ModelDirectionException(
                f"Operation needs a {direction.value} model ; got a {self.direction.value} model"
            )

    # region Updates
    def update(self, t: Transition) -> "DirichletTabularModel":
        """
        Adds one observation. Forward: counts s', r and gamma under (s, a).
        Backward: counts (s, a) under (r, gamma, s').

        :param t: transition with integer states
        :type t: Transition
        :return: the model itself
        :rtype: DirichletTabularModel
        """
        s, a = int(t.state), int(t.action)
        if self.direction is ModelDirection.FORWARD:
            # growing a support replaces the count array, so index first
            reward_index: int = self._support_index("reward", float(t.reward))
            discount_index: int = self._support_index("discount", float(t.discount))
            self._next_counts[s, a, int(t.next_state)] += 1.0
            self._reward_counts[s, a, reward_index] += 1.0
            self._discount_counts[s, a, discount_index] += 1.0
            self._refresh_row(s, a)
        else:
            key = self._backward_key(t.reward, t.discount, t.next_state)
            counts = self._predecessor_counts.get(key)
            if counts is None:
                counts = np.full(self.num_states * self.num_actions, self.prior_concentration)
                self._predecessor_counts[key] = counts
            counts[s * self.num_actions + a] += 1.0
        self.observations += 1
        return self

    def _support_index(self, kind: str, value: float) -> int:
        support: List[float] = self.reward_support if kind == "reward" else self.discount_support
        if value in support:
            return support.index(value)
        # a new value extends the support of every key with prior mass
        support.append(value)
        column = np.full((self.num_states, self.num_actions, 1), self.prior_concentration)
        if kind == "reward":
            self._reward_counts = np.concatenate([self._reward_counts, column], axis=2)
        else:
            self._discount_counts = np.concatenate([self._discount_counts, column], axis=2)
        logging.debug(f"{kind} support grew to {support}")
        self._refresh_tables()
        return len(support) - 1

    @staticmethod
    def _backward_key(reward: float, discount: float, next_state: int) -> Tuple[float, float, int]:
        return float(reward), float(discount), int(next_state)

    def _refresh_row(self, s: int, a: int) -> None:
        counts = self._next_counts[s, a]
        self._next_probabilities[s, a] = counts / counts.sum()
        if self.reward_support:
            counts = self._reward_counts[s, a]
            self._mean_rewards[s, a] = float(counts @ np.array(self.reward_support)) / counts.sum()
        if self.discount_support:
            counts = self._discount_counts[s, a]
            self._mean_discounts[s, a] = float(counts @ np.array(self.discount_support)) / counts.sum()
            if 0.0 in self.discount_support:
                terminal: int = self.discount_support.index(0.0)
                self._continuation[s, a] = 1.0 - counts[terminal] / counts.sum()

    def _refresh_tables(self) -> None:
        self._next_probabilities = self._next_counts / self._next_counts.sum(axis=2, keepdims=True)
        if self.reward_support:
            self._mean_rewards = (self._reward_counts @ np.array(self.reward_support)) / self._reward_counts.sum(axis=2)
        if self.discount_support:
            totals: np.ndarray = self._discount_counts.sum(axis=2)
            self._mean_discounts = (self._discount_counts @ np.array(self.discount_support)) / totals
            if 0.0 in self.discount_support:
                terminal = self.discount_support.index(0.0)
                self._continuation = 1.0 - self._discount_counts[:, :, terminal] / totals
    # endregion

    # region Predictive distributions
    def next_state_probabilities(self, s: int, a: int) -> np.ndarray:
        self._require(ModelDirection.FORWARD)
        counts = self._next_counts[s, a]
        return counts / counts.sum()

    def reward_probabilities(self, s: int, a: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        :return: (support, probabilities)
        """
        self._require(ModelDirection.FORWARD)
        counts = self._reward_counts[s, a]
        return np.array(self.reward_support), counts / counts.sum()

    def discount_probabilities(self, s: int, a: int) -> Tuple[np.ndarray, np.ndarray]:
        self._require(ModelDirection.FORWARD)
        counts = self._discount_counts[s, a]
        return np.array(self.discount_support), counts / counts.sum()

    def predecessor_probabilities(self, reward: float, discount: float, next_state: int) -> np.ndarray:
        """
        Pr(s, a | r, gamma, s') flattened as s * num_actions + a.
        """
        self._require(ModelDirection.BACKWARD)
        counts = self._predecessor_counts.get(self._backward_key(reward, discount, next_state))
        if counts is None:
            size: int = self.num_states * self.num_actions
            return np.full(size, 1.0 / size)
        return counts / counts.sum()

    def expected_tables(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Expectation model used by search: per (s, a) the posterior-mean
        successor distribution, reward and discount.

        :return: (next-state probabilities (S, A, S), rewards (S, A), discounts (S, A))
        :rtype: Tuple[np.ndarray, np.ndarray, np.ndarray]
        """
        self._require(ModelDirection.FORWARD)
        return self._next_probabilities, self._mean_rewards, self._mean_discounts

    def continuation_probabilities(self) -> np.ndarray:
        """
        Pr(gamma != 0 | s, a) of shape (S, A); 1 while 0 is not a known discount.
        """
        self._require(ModelDirection.FORWARD)
        return self._continuation

    @property
    def count_mass(self) -> float:
        """
        Observed count mass, prior excluded.
        """
        if self.direction is ModelDirection.FORWARD:
            return float(self._next_counts.sum() - self._next_counts.size * self.prior_concentration)
        return float(sum(
            counts.sum() - counts.size * self.prior_concentration
            for counts in self._predecessor_counts.values()
        ))
    # endregion

    # region Sampling
    def sample_forward(self, s: int, a: int, rng: np.random.Generator) -> Tuple[float, float, int]:
        """
        Draws s', r and gamma independently from their posteriors under (s, a).
        The draws are not jointly consistent: a sampled reward need not belong
        with the sampled successor.

        :raises ModelDirectionException: on a backward model
        :raises ModelSupportException: when no reward or discount value is known
        :return: (r, gamma, s')
        :rtype: Tuple[float, float, int]
        """
        self._require(ModelDirection.FORWARD)
        if not self.reward_support or not self.discount_support:
            raise ModelSupportException("Cannot sample a reward or discount before one is known")
        next_state: int = sample_categorical(self._next_counts[s, a], rng)
        reward: float = self.reward_support[sample_categorical(self._reward_counts[s, a], rng)]
        discount: float = self.discount_support[sample_categorical(self._discount_counts[s, a], rng)]
        return reward, discount, next_state

    def sample_backward(self, anchor: Transition, rng: np.random.Generator) -> Transition:
        """
        Keeps (r, gamma, s') of ``anchor`` and draws a predecessor (s, a) from
        Pr(s, a | r, gamma, s').

        :raises ModelDirectionException: on a forward model
        :return: the imagined transition
        :rtype: Transition
        """
        self._require(ModelDirection.BACKWARD)
        counts = self._predecessor_counts.get(
            self._backward_key(anchor.reward, anchor.discount, anchor.next_state)
        )
        if counts is None:
            index = int(rng.integers(self.num_states * self.num_actions))
        else:
            index = sample_categorical(counts, rng)
        s, a = divmod(index, self.num_actions)
        return Transition(s, a, anchor.reward, anchor.discount, anchor.next_state)
    # endregion


def model_update(model: DirichletTabularModel, t: Transition) -> DirichletTabularModel:
    return model.update(t)


def sample_forward(
        model: DirichletTabularModel, s: int, a: int, rng: np.random.Generator
) -> Tuple[float, float, int]:
    return model.sample_forward(s, a, rng)


def sample_backward(model: DirichletTabularModel, t_anchor: Transition, rng: np.random.Generator) -> Transition:
    return model.sample_backward(t_anchor, rng)
