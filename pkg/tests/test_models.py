from collections import Counter

import numpy as np
import pytest

from conftest import cell
from dyna_replay_lab.core.exceptions import GeneralException, ShapeMismatchException
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.envs import Action, IndexedGridWorld, LocalViewEncoder, grid_step, load_layout, reset
from dyna_replay_lab.models import (
    DirichletTabularModel,
    ModelDirection,
    ModelDirectionException,
    ModelSupportException,
    NeuralModel,
    NeuralModelLearner,
    model_update,
    neural_predict,
    sample_backward,
    sample_forward,
)
from dyna_replay_lab.replay import ReplayBuffer


def forward_model(num_states=10, num_actions=2, prior=1.0):
    return DirichletTabularModel(
        ModelDirection.FORWARD, num_states, num_actions,
        reward_support=(0.0, 1.0), discount_support=(0.0, 0.9), prior_concentration=prior,
    )


def backward_model(num_states=10, num_actions=2, prior=1.0):
    return DirichletTabularModel(ModelDirection.BACKWARD, num_states, num_actions, prior_concentration=prior)


class TestForwardModel:
    def test_uniform_prior(self):
        np.testing.assert_allclose(forward_model().next_state_probabilities(3, 1), np.full(10, 0.1))

    def test_one_observation(self):
        model = model_update(forward_model(), Transition(0, 0, 0.0, 0.9, 4))
        assert model.next_state_probabilities(0, 0)[4] == pytest.approx(2 / 11)
        # other pairs are untouched
        np.testing.assert_allclose(model.next_state_probabilities(0, 1), np.full(10, 0.1))

    def test_concentrates(self):
        model = forward_model()
        for _ in range(1000):
            model.update(Transition(2, 1, 0.0, 0.9, 3))
        assert model.next_state_probabilities(2, 1)[3] >= 0.99

    def test_sampling_frequency(self, rng):
        model = forward_model(num_states=81)
        for _ in range(1000):
            model.update(Transition(0, 0, 1.0, 0.0, 7))
        draws = [sample_forward(model, 0, 0, rng) for _ in range(10_000)]
        assert np.mean([s_next == 7 for _, _, s_next in draws]) >= 0.9
        assert np.mean([r == 1.0 for r, _, _ in draws]) >= 0.99
        assert np.mean([g == 0.0 for _, g, _ in draws]) >= 0.99

    def test_unobserved_pair_samples_uniformly(self, rng):
        model = forward_model(num_states=4)
        counts = Counter(sample_forward(model, 1, 1, rng)[2] for _ in range(20_000))
        sigma = np.sqrt(20_000 * 0.25 * 0.75)
        assert all(abs(counts[s] - 5_000) < 4 * sigma for s in range(4))

    def test_learns_slippery_dynamics(self, slippery_four_rooms):
        env = IndexedGridWorld(slippery_four_rooms)
        model = DirichletTabularModel(
            ModelDirection.FORWARD, env.num_states, env.num_actions,
            reward_support=(0.0, 1.0), discount_support=(0.0, 0.99), prior_concentration=0.01,
        )
        s = env.index_of(cell(2, 2))
        stream = np.random.default_rng(7)
        for _ in range(10_000):
            model.update(env.step(s, Action.RIGHT, stream))

        truth = np.zeros(env.num_states)
        truth[env.index_of(cell(2, 3))] += 0.8
        for neighbour in slippery_four_rooms.free_neighbours(cell(2, 2)):
            truth[env.index_of(neighbour)] += 0.2 / 4
        total_variation = 0.5 * np.abs(model.next_state_probabilities(s, Action.RIGHT) - truth).sum()
        assert total_variation < 0.02

    def test_expected_tables(self):
        prior = 1e-9
        model = forward_model(prior=prior)
        model.update(Transition(0, 1, 1.0, 0.0, 2))
        probabilities, rewards, discounts = model.expected_tables()
        assert probabilities.shape == (10, 2, 10)
        assert rewards.shape == discounts.shape == (10, 2)
        np.testing.assert_allclose(probabilities.sum(axis=2), 1.0)
        assert probabilities[0, 1, 2] == pytest.approx((1 + prior) / (1 + 10 * prior), rel=1e-12)
        assert rewards[0, 1] == pytest.approx((1 + prior) / (1 + 2 * prior), rel=1e-12)
        assert discounts[0, 1] == pytest.approx(0.9 * prior / (1 + 2 * prior), rel=1e-12)
        assert model.continuation_probabilities()[0, 1] == pytest.approx(prior / (1 + 2 * prior), rel=1e-6)
        # unobserved pairs take the prior mean
        assert rewards[5, 0] == pytest.approx(0.5)
        assert discounts[5, 0] == pytest.approx(0.45)
        np.testing.assert_allclose(probabilities[5, 0], np.full(10, 0.1))

    def test_first_observation_founds_the_support(self):
        model = DirichletTabularModel(ModelDirection.FORWARD, 4, 2)
        model.update(Transition(0, 0, 0.0, 0.9, 1))
        assert model.reward_support == [0.0]
        assert model.discount_support == [0.9]
        np.testing.assert_allclose(model.reward_probabilities(0, 0)[1], [1.0])

    def test_unseen_value_extends_the_support(self):
        model = DirichletTabularModel(ModelDirection.FORWARD, 4, 2, reward_support=(0.0,), discount_support=(0.9,))
        model.update(Transition(0, 0, 1.0, 0.0, 1))
        support, probabilities = model.reward_probabilities(0, 0)
        np.testing.assert_array_equal(support, [0.0, 1.0])
        np.testing.assert_allclose(probabilities, [1 / 3, 2 / 3])
        support, probabilities = model.discount_probabilities(0, 0)
        np.testing.assert_array_equal(support, [0.9, 0.0])
        np.testing.assert_allclose(probabilities, [1 / 3, 2 / 3])
        assert model.continuation_probabilities()[0, 0] == pytest.approx(1 / 3)
        np.testing.assert_allclose(model.reward_probabilities(3, 1)[1], [0.5, 0.5])

    def test_posterior_is_prior_plus_counts(self):
        # random experience against a closed-form Dirichlet posterior
        stream = np.random.default_rng(17)
        num_states, num_actions, prior = 6, 3, 1.0
        rewards, discounts = [0.0, 1.0, 0.5], [0.0, 0.9]
        model = DirichletTabularModel(
            ModelDirection.FORWARD, num_states, num_actions, prior_concentration=prior
        )
        next_counts = np.zeros((num_states, num_actions, num_states))
        reward_counts = {}
        discount_counts = {}
        for _ in range(500):
            s, a, s_next = (int(stream.integers(n)) for n in (num_states, num_actions, num_states))
            r, g = rewards[stream.integers(3)], discounts[stream.integers(2)]
            model.update(Transition(s, a, r, g, s_next))
            next_counts[s, a, s_next] += 1
            reward_counts[(s, a, r)] = reward_counts.get((s, a, r), 0) + 1
            discount_counts[(s, a, g)] = discount_counts.get((s, a, g), 0) + 1

        probabilities, mean_rewards, mean_discounts = model.expected_tables()
        oracle = (next_counts + prior) / (next_counts.sum(axis=2, keepdims=True) + num_states * prior)
        np.testing.assert_allclose(probabilities, oracle, rtol=1e-12)
        for s in range(num_states):
            for a in range(num_actions):
                np.testing.assert_allclose(model.next_state_probabilities(s, a), oracle[s, a], rtol=1e-12)
                for support, counts, means, query in (
                    (rewards, reward_counts, mean_rewards, model.reward_probabilities),
                    (discounts, discount_counts, mean_discounts, model.discount_probabilities),
                ):
                    seen = np.array([counts.get((s, a, v), 0) for v in support], dtype=float)
                    expected = (seen + prior) / (seen.sum() + len(support) * prior)
                    values, predicted = query(s, a)
                    by_value = dict(zip(values.tolist(), predicted.tolist()))
                    np.testing.assert_allclose([by_value[v] for v in support], expected, rtol=1e-12)
                    assert means[s, a] == pytest.approx(float(expected @ np.array(support)), rel=1e-12)
        assert model.count_mass == pytest.approx(500)

    def test_backward_posterior_is_prior_plus_counts(self):
        stream = np.random.default_rng(18)
        num_states, num_actions = 5, 2
        model = backward_model(num_states, num_actions)
        counts = {}
        for _ in range(300):
            s, a, s_next = (int(stream.integers(n)) for n in (num_states, num_actions, num_states))
            model.update(Transition(s, a, 0.0, 0.9, s_next))
            row = counts.setdefault(s_next, np.zeros(num_states * num_actions))
            row[s * num_actions + a] += 1
        for s_next, row in counts.items():
            expected = (row + 1.0) / (row.sum() + num_states * num_actions)
            np.testing.assert_allclose(model.predecessor_probabilities(0.0, 0.9, s_next), expected, rtol=1e-12)

    def test_support_grows(self):
        model = forward_model()
        model.update(Transition(0, 0, 0.5, 0.9, 1))
        support, probabilities = model.reward_probabilities(0, 0)
        np.testing.assert_array_equal(support, [0.0, 1.0, 0.5])
        np.testing.assert_allclose(probabilities, [0.25, 0.25, 0.5])
        # the new value reaches every other pair as prior mass
        np.testing.assert_allclose(model.reward_probabilities(4, 1)[1], np.full(3, 1 / 3))

    def test_empty_support(self, rng):
        model = DirichletTabularModel(ModelDirection.FORWARD, 3, 2)
        with pytest.raises(ModelSupportException):
            model.sample_forward(0, 0, rng)

    def test_prior_must_be_positive(self):
        with pytest.raises(GeneralException):
            forward_model(prior=0.0)


class TestBackwardModel:
    def test_predecessor_frequencies(self, rng):
        model = backward_model(prior=1e-9)
        for predecessor in [(1, 0)] * 3 + [(2, 1)]:
            model.update(Transition(*predecessor, 0.0, 0.9, 5))
        anchor = Transition(9, 0, 0.0, 0.9, 5)
        draws = 20_000
        counts = Counter((t.state, t.action) for t in (sample_backward(model, anchor, rng) for _ in range(draws)))
        sigma = np.sqrt(0.75 * 0.25 / draws)
        assert abs(counts[(1, 0)] / draws - 0.75) < 4 * sigma
        assert abs(counts[(2, 1)] / draws - 0.25) < 4 * sigma
        assert counts[(1, 0)] + counts[(2, 1)] == draws

    def test_anchor_preserved(self, rng):
        model = backward_model()
        model.update(Transition(3, 1, 1.0, 0.0, 4))
        anchor = Transition(0, 0, 1.0, 0.0, 4)
        for _ in range(100):
            t = model.sample_backward(anchor, rng)
            assert (t.reward, t.discount, t.next_state) == (1.0, 0.0, 4)
            assert 0 <= t.state < 10 and 0 <= t.action < 2

    def test_unobserved_key_is_uniform(self):
        model = backward_model()
        model.update(Transition(3, 1, 1.0, 0.0, 4))
        np.testing.assert_allclose(model.predecessor_probabilities(0.0, 0.9, 4), np.full(20, 1 / 20))

    def test_key_includes_reward_and_discount(self):
        model = backward_model(prior=1e-9)
        model.update(Transition(3, 1, 1.0, 0.0, 4))
        model.update(Transition(6, 0, 0.0, 0.9, 4))
        assert model.predecessor_probabilities(1.0, 0.0, 4)[3 * 2 + 1] == pytest.approx(1.0)
        assert model.predecessor_probabilities(0.0, 0.9, 4)[6 * 2 + 0] == pytest.approx(1.0)


class TestDirection:
    def test_forward_only_operations(self, rng):
        model = backward_model()
        with pytest.raises(ModelDirectionException):
            model.sample_forward(0, 0, rng)
        with pytest.raises(ModelDirectionException):
            model.expected_tables()
        with pytest.raises(ModelDirectionException):
            model.next_state_probabilities(0, 0)

    def test_backward_only_operations(self, rng):
        model = forward_model()
        with pytest.raises(ModelDirectionException):
            model.sample_backward(Transition(0, 0, 0.0, 0.9, 1), rng)
        with pytest.raises(ModelDirectionException):
            model.predecessor_probabilities(0.0, 0.9, 1)

    def test_count_mass(self, rng):
        forward, backward = forward_model(), backward_model()
        for _ in range(50):
            t = Transition(int(rng.integers(10)), int(rng.integers(2)), 0.0, 0.9, int(rng.integers(10)))
            forward.update(t)
            backward.update(t)
        assert forward.count_mass == pytest.approx(50)
        assert backward.count_mass == pytest.approx(50)
        assert forward.observations == backward.observations == 50


class TestNeuralModel:
    def test_initial_predictions(self, rng, dyna_maze):
        model = NeuralModel(dyna_maze.num_actions, dyna_maze.discount, rng)
        observation = LocalViewEncoder(dyna_maze)(dyna_maze.start)
        reward, discount, next_observation = neural_predict(model, observation, Action.UP)
        assert reward == 0.0
        assert discount == pytest.approx(dyna_maze.discount / 2)
        np.testing.assert_array_equal(next_observation, np.zeros(25))

    def test_observation_shape(self, rng):
        model = NeuralModel(4, 0.95, rng)
        with pytest.raises(ShapeMismatchException):
            neural_predict(model, np.zeros(24), 0)
        with pytest.raises(ShapeMismatchException):
            neural_predict(model, np.zeros((2, 25)), 0)

    def test_batch_predict(self, rng):
        model = NeuralModel(4, 0.95, rng)
        rewards, discounts, next_observations = model.predict(np.zeros((3, 25)), np.array([0, 1, 2]))
        assert rewards.shape == discounts.shape == (3,)
        assert next_observations.shape == (3, 25)
        with pytest.raises(ShapeMismatchException):
            model.predict(np.zeros((3, 25)), np.array([0, 1]))

    def test_learner_skips_empty_replay(self, rng, dyna_maze):
        replay = ReplayBuffer()
        learner = NeuralModelLearner(NeuralModel(4, 0.95, rng), replay, LocalViewEncoder(dyna_maze), rng)
        learner.update(grid_step(dyna_maze, dyna_maze.start, Action.UP, rng))
        assert learner.last_loss is None

    @pytest.mark.slow
    def test_learns_maze_transitions(self, dyna_maze):
        rng = np.random.default_rng(3)
        replay = ReplayBuffer()
        state = reset(dyna_maze, rng)
        while len(replay) < 30:
            t = grid_step(dyna_maze, state, int(rng.integers(4)), rng)
            replay.append(t)
            state = reset(dyna_maze, rng) if t.is_terminal else t.next_state

        encoder = LocalViewEncoder(dyna_maze)
        learner = NeuralModelLearner(NeuralModel(4, dyna_maze.discount, rng), replay, encoder, rng)
        learner.update(replay[0])
        initial = learner.last_loss
        for _ in range(2000):
            learner.update(replay[0])
        assert learner.last_loss < 0.5 * initial


def every_maze_transition(world):
    stream = np.random.default_rng(0)
    return [
        grid_step(world, c, a, stream)
        for c in world.free_cells if c != world.goal
        for a in range(world.num_actions)
    ]


@pytest.fixture(scope="module")
def trained_maze_model():
    """
    Neural model trained on 10^4 deterministic Dyna maze transitions, two
    mini-batch updates per stored transition.
    """
    world = load_layout("dyna_maze")
    stream = np.random.default_rng(5)
    transitions = every_maze_transition(world)
    replay = ReplayBuffer()
    while len(replay) < 10_000:
        for index in stream.permutation(len(transitions))[:10_000 - len(replay)]:
            replay.append(transitions[index])

    encoder = LocalViewEncoder(world)
    learner = NeuralModelLearner(NeuralModel(world.num_actions, world.discount, stream), replay, encoder, stream)
    for _ in range(2):
        for t in replay:
            learner.update(t)
    return world, encoder, learner.model, transitions


@pytest.mark.slow
class TestTrainedNeuralModel:
    def test_next_observation_error(self, trained_maze_model):
        _, encoder, model, transitions = trained_maze_model
        observations = np.stack([encoder(t.state) for t in transitions])
        actions = np.array([t.action for t in transitions])
        _, _, predicted = model.predict(observations, actions)
        truth = np.stack([encoder(t.next_state) for t in transitions])
        assert np.mean((predicted - truth) ** 2) < 0.05

    def test_goal_transitions_terminate(self, trained_maze_model):
        world, encoder, model, transitions = trained_maze_model
        goal_entries = [t for t in transitions if t.is_terminal]
        assert goal_entries
        for t in goal_entries:
            _, discount, _ = neural_predict(model, encoder(t.state), t.action)
            assert discount < 0.1 * world.discount
