import logging

from dataclasses import dataclass, field
from typing import Any, List, Optional

import numpy as np

from dyna_replay_lab.agents.agent import Agent, PlannerKind
from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.replay.buffer import ReplayBuffer


@dataclass(frozen=True)
class LoopConfig:
    """
    :param iterations: K
    :param interactions: M, real steps per iteration
    :param planning_steps: P, planning updates per iteration
    :param planner: source of planning transitions
    :param search_depth: breadth-first search depth of the behaviour policy,
        0 acts on Q directly
    :param episode_budget: stop once this many episodes completed
    :param max_episode_steps: truncate longer episodes; None never truncates
    """

    iterations: int
    interactions: int = 1
    planning_steps: int = 0
    planner: PlannerKind = PlannerKind.NONE
    search_depth: int = 0
    episode_budget: Optional[int] = None
    max_episode_steps: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "planner", PlannerKind(self.planner))
        if self.iterations < 1 or self.interactions < 1:
            raise GeneralException(
                f"iterations and interactions must be at least 1 : {self.iterations}, {self.interactions}"
            )
        if self.planning_steps < 0:
            raise GeneralException(f"planning_steps must be non-negative : {self.planning_steps}")
        if self.search_depth < 0:
            raise GeneralException(f"search_depth must be non-negative : {self.search_depth}")
        if self.episode_budget is not None and self.episode_budget < 1:
            raise GeneralException(f"episode_budget must be positive : {self.episode_budget}")
        if self.max_episode_steps is not None and self.max_episode_steps < 1:
            raise GeneralException(f"max_episode_steps must be positive : {self.max_episode_steps}")

    @property
    def total_interactions(self) -> int:
        return self.iterations * self.interactions


@dataclass
class LoopTrace:
    """
    Completed episodes of one loop run, in order. Truncated episodes count
    as completed.
    """

    episode_lengths: List[int] = field(default_factory=list)
    episode_returns: List[float] = field(default_factory=list)
    total_steps: int = 0

    @property
    def episodes(self) -> int:
        return len(self.episode_lengths)


def run_dyna_loop(
        env: Any,
        model: Any,
        replay: ReplayBuffer,
        agent: Agent,
        config: LoopConfig,
        rng: np.random.Generator,
) -> LoopTrace:
    """
    Model-based learning loop. Each of K iterations takes M real steps; every
    real transition goes to the replay, updates the model and, unless the
    planner is plain replay, the agent. Then P planning updates follow, with
    transitions drawn from the replay or imagined by the model. P = 0 is
    model-free Q-learning.

    :param env: anything with ``reset(rng)`` and ``step(state, action, rng)``
    :param model: the model updated by real transitions, or None
    :param replay: buffer of real transitions
    :type replay: ReplayBuffer
    :param agent:
    :type agent: Agent
    :param config:
    :type config: LoopConfig
    :param rng: the single random stream of the run
    :type rng: np.random.Generator
    :raises ComponentMismatchException: when the parts do not fit together
    :return: the completed episodes
    :rtype: LoopTrace
    """
    agent.check_components(env, model, config.planner, config.search_depth)
    learns: bool = config.planner is not PlannerKind.REPLAY
    trace = LoopTrace()

    state = env.reset(rng)
    steps: int = 0
    episode_return: float = 0.0
    for _ in range(config.iterations):
        for _ in range(config.interactions):
            action: int = agent.act(state, rng, model=model, search_depth=config.search_depth)
            t: Transition = env.step(state, action, rng)
            replay.append(t)
            if model is not None:
                model.update(t)
            if learns:
                agent.learn(t)

            steps += 1
            episode_return += t.reward
            trace.total_steps += 1
            truncated: bool = config.max_episode_steps is not None and steps >= config.max_episode_steps
            if t.is_terminal or truncated:
                if not t.is_terminal:
                    replay.end_episode()
                trace.episode_lengths.append(steps)
                trace.episode_returns.append(episode_return)
                logging.debug(f"episode {trace.episodes} : {steps} steps, return {episode_return}")
                if config.episode_budget is not None and trace.episodes >= config.episode_budget:
                    return trace
                state = env.reset(rng)
                steps = 0
                episode_return = 0.0
            else:
                state = t.next_state

        for _ in range(config.planning_steps):
            agent.plan(config.planner, replay, model, rng)

    if config.episode_budget is not None:
        logging.warning(
            f"iteration limit reached after {trace.episodes} of {config.episode_budget} episodes"
        )
    return trace
