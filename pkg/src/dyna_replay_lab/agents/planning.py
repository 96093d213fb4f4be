import numpy as np

from dyna_replay_lab.agents.tabular_q import TabularQ, q_learning_update
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.models.tabular import DirichletTabularModel
from dyna_replay_lab.replay.buffer import ReplayBuffer


def imagine_forward(replay: ReplayBuffer, model: DirichletTabularModel, rng: np.random.Generator) -> Transition:
    """
    Samples a stored (s, a) uniformly and steps it forward through the model.

    :raises EmptyBufferException: when the replay is empty
    """
    anchor: Transition = replay.sample_uniform(rng)[0]
    reward, discount, next_state = model.sample_forward(anchor.state, anchor.action, rng)
    return Transition(anchor.state, anchor.action, reward, discount, next_state)


def imagine_backward(replay: ReplayBuffer, model: DirichletTabularModel, rng: np.random.Generator) -> Transition:
    """
    Samples a stored transition uniformly and replaces its (s, a) with a
    predecessor drawn from the backward model; (r, gamma, s') stay real.
    """
    anchor: Transition = replay.sample_uniform(rng)[0]
    return model.sample_backward(anchor, rng)


def replay_plan_step(replay: ReplayBuffer, q: TabularQ, rng: np.random.Generator) -> TabularQ:
    return q_learning_update(q, replay.sample_uniform(rng)[0])


def forward_plan_step(
        replay: ReplayBuffer, model: DirichletTabularModel, q: TabularQ, rng: np.random.Generator
) -> TabularQ:
    return q_learning_update(q, imagine_forward(replay, model, rng))


def backward_plan_step(
        replay: ReplayBuffer, model: DirichletTabularModel, q: TabularQ, rng: np.random.Generator
) -> TabularQ:
    # the update lands on the imagined predecessor state
    return q_learning_update(q, imagine_backward(replay, model, rng))

