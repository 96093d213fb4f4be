import logging

from typing import Optional, Tuple

import numpy as np

from dyna_replay_lab.core.exceptions import ShapeMismatchException
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.envs.grid_world import LocalViewEncoder
from dyna_replay_lab.neural.adam import AdamState, adam_step
from dyna_replay_lab.neural.double_q import TransitionBatch
from dyna_replay_lab.neural.mlp import Mlp
from dyna_replay_lab.replay.buffer import ReplayBuffer


OBSERVATION_SIZE: int = 25


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class NeuralModel:
    """
    Deterministic expectation model of the maze built from three networks on
    the input (observation, one-hot action): next observation (25 outputs),
    reward (1 output) and termination logit (1 output).
    """

    def __init__(
            self,
            num_actions: int,
            discount: float,
            rng: np.random.Generator,
            observation_size: int = OBSERVATION_SIZE,
    ):
        """
        :param num_actions:
        :type num_actions: int
        :param discount: discount of non-terminal transitions; the predicted
            discount is discount * (1 - termination probability)
        :type discount: float
        :param rng: random stream for weight initialisation
        :type rng: np.random.Generator
        """
        super().__init__()
        self.num_actions: int = num_actions
        self.discount: float = discount
        self.observation_size: int = observation_size
        input_size: int = observation_size + num_actions
        self.transition_net: Mlp = Mlp.initialise(input_size, observation_size, rng, zero_output=True)
        self.reward_net: Mlp = Mlp.initialise(input_size, 1, rng, zero_output=True)
        self.termination_net: Mlp = Mlp.initialise(input_size, 1, rng, zero_output=True)

    def inputs(self, observations: np.ndarray, actions: np.ndarray) -> np.ndarray:
        observations = np.atleast_2d(np.asarray(observations, dtype=float))
        actions = np.atleast_1d(np.asarray(actions, dtype=int))
        if observations.shape[1] != self.observation_size:
            raise ShapeMismatchException(
                f"Expected observations of width {self.observation_size} ; got {observations.shape}"
            )
        if len(actions) != len(observations):
            raise ShapeMismatchException(
                f"Got {len(actions)} actions for {len(observations)} observations"
            )
        one_hot: np.ndarray = np.eye(self.num_actions)[actions]
        return np.hstack([observations, one_hot])

    def predict(self, observations: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Batched prediction.

        :return: (rewards (B,), discounts (B,), next observations (B, 25))
        """
        x: np.ndarray = self.inputs(observations, actions)
        rewards: np.ndarray = self.reward_net.forward(x)[:, 0]
        termination: np.ndarray = _sigmoid(self.termination_net.forward(x)[:, 0])
        next_observations: np.ndarray = self.transition_net.forward(x)
        return rewards, self.discount * (1.0 - termination), next_observations


def neural_predict(model: NeuralModel, observation: np.ndarray, action: int) -> Tuple[float, float, np.ndarray]:
    """
    Imagined outcome of one (observation, action): (r_hat, gamma_hat, o'_hat).
    The next observation is an expected observation and is used as-is.

    :raises ShapeMismatchException: for an observation of the wrong length
    """
    if np.ndim(observation) != 1 or len(observation) != model.observation_size:
        raise ShapeMismatchException(
            f"Expected one observation of length {model.observation_size} ; got shape {np.shape(observation)}"
        )
    rewards, discounts, next_observations = model.predict(observation[None, :], np.array([action]))
    return float(rewards[0]), float(discounts[0]), next_observations[0]


def train_step(model: NeuralModel, batch: TransitionBatch, optimisers: Tuple[AdamState, AdamState, AdamState]) -> float:
    """
    One Adam step per network: squared error for the next observation and the
    reward, logistic loss for termination (target 1 on terminal transitions).

    :return: next-observation mean squared error before the step
    :rtype: float
    """
    x: np.ndarray = model.inputs(batch.observations, batch.actions)
    size: int = len(batch)
    transition_opt, reward_opt, termination_opt = optimisers

    predicted_next: np.ndarray = model.transition_net.forward(x)
    next_error: np.ndarray = predicted_next - batch.next_observations
    adam_step(transition_opt, model.transition_net.parameters,
              model.transition_net.gradients(x, 2.0 * next_error / (size * model.observation_size)))

    reward_error: np.ndarray = model.reward_net.forward(x) - batch.rewards[:, None]
    adam_step(reward_opt, model.reward_net.parameters,
              model.reward_net.gradients(x, 2.0 * reward_error / size))

    terminal: np.ndarray = (batch.discounts == 0.0).astype(float)[:, None]
    termination: np.ndarray = _sigmoid(model.termination_net.forward(x))
    adam_step(termination_opt, model.termination_net.parameters,
              model.termination_net.gradients(x, (termination - terminal) / size))

    return float(np.mean(next_error ** 2))


class NeuralModelLearner:
    """
    Owns a NeuralModel and its optimisers. Every observed transition triggers
    one training mini-batch drawn from the replay the transition was stored in.
    """

    def __init__(
            self,
            model: NeuralModel,
            replay: ReplayBuffer,
            encoder: LocalViewEncoder,
            rng: np.random.Generator,
            batch_size: int = 32,
            learning_rate: float = 1e-3,
    ):
        super().__init__()
        self.model: NeuralModel = model
        self.replay: ReplayBuffer = replay
        self.encoder: LocalViewEncoder = encoder
        self.rng: np.random.Generator = rng
        self.batch_size: int = batch_size
        self.optimisers: Tuple[AdamState, AdamState, AdamState] = (
            AdamState.for_parameters(model.transition_net.parameters, learning_rate),
            AdamState.for_parameters(model.reward_net.parameters, learning_rate),
            AdamState.for_parameters(model.termination_net.parameters, learning_rate),
        )
        self.last_loss: Optional[float] = None

    def update(self, t: Transition) -> "NeuralModelLearner":
        if len(self.replay) == 0:
            return self
        sampled = self.replay.sample_uniform(self.rng, self.batch_size)
        batch = TransitionBatch.from_transitions([self.encoder.encode(s) for s in sampled])
        self.last_loss = train_step(self.model, batch, self.optimisers)
        logging.debug(f"model update ; next-observation loss {self.last_loss}")
        return self
