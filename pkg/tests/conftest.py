import numpy as np
import pytest

from dyna_replay_lab.envs import GridState, GridWorld, IndexedGridWorld, load_layout
from dyna_replay_lab.models import DirichletTabularModel, ModelDirection


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def dyna_maze() -> GridWorld:
    return load_layout("dyna_maze")


@pytest.fixture
def four_rooms() -> GridWorld:
    return load_layout("four_rooms")


@pytest.fixture
def slippery_four_rooms() -> GridWorld:
    return load_layout("four_rooms", slip_probability=0.2)


@pytest.fixture
def indexed_four_rooms(four_rooms) -> IndexedGridWorld:
    return IndexedGridWorld(four_rooms)


def exact_forward_model(env: IndexedGridWorld, prior: float = 1e-9) -> DirichletTabularModel:
    """
    Forward model that has seen every deterministic transition once under a
    near-zero prior.
    """
    model = DirichletTabularModel(ModelDirection.FORWARD, env.num_states, env.num_actions, prior_concentration=prior)
    rng = np.random.default_rng(0)
    for s in range(env.num_states):
        if env.state_at(s) == env.world.goal:
            continue
        for a in range(env.num_actions):
            model.update(env.step(s, a, rng))
    return model


def cell(row: int, column: int) -> GridState:
    return GridState(row, column)
