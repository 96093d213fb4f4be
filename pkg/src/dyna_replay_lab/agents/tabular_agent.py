from typing import Any, Optional

import numpy as np

from dyna_replay_lab.agents.agent import Agent, PlannerKind, require
from dyna_replay_lab.agents.planning import backward_plan_step, forward_plan_step, replay_plan_step
from dyna_replay_lab.agents.policy import act
from dyna_replay_lab.agents.search import bfs_plan
from dyna_replay_lab.agents.tabular_q import TabularQ, q_learning_update
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.models.tabular import DirichletTabularModel, ModelDirection
from dyna_replay_lab.replay.buffer import ReplayBuffer


def _is_tabular(model: Optional[Any], direction: ModelDirection) -> bool:
    return isinstance(model, DirichletTabularModel) and model.direction is direction


class TabularAgent(Agent):
    """
    Q-learning on integer states, planning with replay or a Dirichlet model
    and optionally behaving with breadth-first search over the forward model.
    """

    def __init__(self, q: TabularQ):
        super().__init__()
        self.q: TabularQ = q

    def __repr__(self) -> str:
        return f"TabularAgent(states={self.q.num_states}, actions={self.q.num_actions})"

    def act(self, state: int, rng: np.random.Generator, model: Any = None, search_depth: int = 0) -> int:
        if search_depth > 0:
            values: np.ndarray = bfs_plan(self.q, model, state, search_depth).values
        else:
            values = self.q.values[state]
        return act(values, self.q.epsilon, rng)

    def learn(self, t: Transition) -> None:
        q_learning_update(self.q, t)

    def plan(self, planner: PlannerKind, replay: ReplayBuffer, model: Any, rng: np.random.Generator) -> None:
        if planner is PlannerKind.REPLAY:
            replay_plan_step(replay, self.q, rng)
        elif planner is PlannerKind.FORWARD_DYNA:
            forward_plan_step(replay, model, self.q, rng)
        elif planner is PlannerKind.BACKWARD_DYNA:
            backward_plan_step(replay, model, self.q, rng)

    def check_components(self, env: Any, model: Any, planner: PlannerKind, search_depth: int) -> None:
        require(
            getattr(env, "num_states", None) == self.q.num_states and env.num_actions == self.q.num_actions,
            f"Q table of shape {self.q.values.shape} does not cover the environment",
        )
        if model is not None:
            require(isinstance(model, DirichletTabularModel), "Tabular agents need a tabular model", model)
            require(
                model.num_states == self.q.num_states and model.num_actions == self.q.num_actions,
                "Model and Q table disagree on the state-action space", model,
            )
        if planner is PlannerKind.FORWARD_DYNA:
            require(_is_tabular(model, ModelDirection.FORWARD), "forward-dyna needs a forward model", model)
        if planner is PlannerKind.BACKWARD_DYNA:
            require(_is_tabular(model, ModelDirection.BACKWARD), "backward-dyna needs a backward model", model)
        if search_depth > 0:
            require(_is_tabular(model, ModelDirection.FORWARD), "Search needs a forward model", model)
