import logging

from dataclasses import replace
from typing import Any, Optional

import numpy as np

from dyna_replay_lab.agents.agent import Agent, PlannerKind, require
from dyna_replay_lab.agents.policy import act
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.envs.grid_world import GridWorld, LocalViewEncoder
from dyna_replay_lab.models.neural_model import NeuralModelLearner
from dyna_replay_lab.neural.adam import AdamState
from dyna_replay_lab.neural.double_q import TransitionBatch, double_q_update
from dyna_replay_lab.neural.mlp import Mlp
from dyna_replay_lab.replay.buffer import ReplayBuffer


class NeuralQAgent(Agent):
    """
    Double-Q network agent on local-view observations.

    Every real transition the loop hands to ``learn`` gets a one-sample
    double-Q update; every planning step is one mini-batch double-Q update.
    With the replay planner the batch is used as stored, with forward Dyna
    the stored (r, gamma, o') are replaced by the neural model's
    predictions for the stored (o, a).
    """

    def __init__(
            self,
            online: Mlp,
            encoder: LocalViewEncoder,
            epsilon: float = 0.1,
            batch_size: int = 32,
            target_update_interval: int = 100,
            learning_rate: float = 1e-3,
    ):
        super().__init__()
        self.online: Mlp = online
        self.target: Mlp = online.copy()
        self.encoder: LocalViewEncoder = encoder
        self.epsilon: float = epsilon
        self.batch_size: int = batch_size
        self.target_update_interval: int = target_update_interval
        self.adam: AdamState = AdamState.for_parameters(online.parameters, learning_rate)
        self.updates: int = 0
        self.last_loss: Optional[float] = None

    @classmethod
    def create(cls, world: GridWorld, rng: np.random.Generator, **kwargs) -> "NeuralQAgent":
        encoder = LocalViewEncoder(world)
        online = Mlp.initialise(encoder.size, world.num_actions, rng)
        return cls(online=online, encoder=encoder, **kwargs)

    def act(self, state: Any, rng: np.random.Generator, model: Any = None, search_depth: int = 0) -> int:
        return act(self.online.forward(self.encoder(state)), self.epsilon, rng)

    def learn(self, t: Transition) -> None:
        """
        Model-free double-Q update on the real transition alone. With no
        planner this is the whole of learning.
        """
        self._update(TransitionBatch.from_transitions([self.encoder.encode(t)]))

    def plan(self, planner: PlannerKind, replay: ReplayBuffer, model: Any, rng: np.random.Generator) -> None:
        if planner is PlannerKind.NONE:
            return
        batch = TransitionBatch.from_transitions(
            [self.encoder.encode(t) for t in replay.sample_uniform(rng, self.batch_size)]
        )
        if planner is PlannerKind.FORWARD_DYNA:
            rewards, discounts, next_observations = model.model.predict(batch.observations, batch.actions)
            batch = replace(batch, rewards=rewards, discounts=discounts, next_observations=next_observations)
        self._update(batch)

    def _update(self, batch: TransitionBatch) -> None:
        self.last_loss = double_q_update(self.online, self.target, batch, self.adam)
        self.updates += 1
        if self.updates % self.target_update_interval == 0:
            self.target.load_from(self.online)
            logging.debug(f"target network refreshed after {self.updates} updates")

    def check_components(self, env: Any, model: Any, planner: PlannerKind, search_depth: int) -> None:
        require(isinstance(env, GridWorld), f"Neural agents act on a GridWorld ; got {type(env).__name__}")
        require(
            env.num_actions == self.online.output_size,
            f"Q network has {self.online.output_size} outputs for {env.num_actions} actions",
        )
        require(search_depth == 0, "Neural agents do not search")
        require(planner is not PlannerKind.BACKWARD_DYNA, "There is no neural backward model")
        if model is not None or planner is PlannerKind.FORWARD_DYNA:
            require(isinstance(model, NeuralModelLearner), "Neural agents need a neural model", model)
