import numpy as np
import pytest

from dyna_replay_lab.core.exceptions import ShapeMismatchException
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.neural import (
    AdamState,
    EmptyBatchException,
    Mlp,
    SnapshotFormatException,
    TransitionBatch,
    adam_step,
    double_q_targets,
    double_q_update,
    forward,
    gradients,
    load_parameters,
    save_parameters,
)


def reference_forward(net, x):
    w1, b1, w2, b2, w3, b3 = net.parameters
    h1 = np.maximum(x @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3


def biased_net(biases):
    net = Mlp(25, len(biases))
    net.parameters[-1][...] = biases
    return net


class TestMlp:
    def test_zero_network(self):
        net = Mlp(25, 4)
        np.testing.assert_array_equal(forward(net, np.ones(25)), np.zeros(4))

    def test_forward_matches_reference(self, rng):
        net = Mlp.initialise(25, 4, rng)
        x = rng.normal(size=(8, 25))
        np.testing.assert_allclose(net.forward(x), reference_forward(net, x))
        np.testing.assert_allclose(net.forward(x[0]), reference_forward(net, x[:1])[0])

    def test_zero_output_initialisation(self, rng):
        net = Mlp.initialise(29, 25, rng, zero_output=True)
        np.testing.assert_array_equal(net.forward(rng.normal(size=(3, 29))), np.zeros((3, 25)))
        assert np.abs(net.parameters[0]).max() <= 1 / np.sqrt(29)

    def test_input_shape(self):
        with pytest.raises(ShapeMismatchException):
            Mlp(25, 4).forward(np.zeros(24))

    def test_parameter_shapes(self):
        with pytest.raises(ShapeMismatchException):
            Mlp(3, 2, [np.zeros((3, 20))])

    @pytest.mark.parametrize("seed", range(10))
    def test_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        net = Mlp.initialise(3, 2, rng)
        for p in net.parameters:
            p += rng.normal(scale=0.1, size=p.shape)
        x = rng.normal(size=(4, 3))
        cotangent = rng.normal(size=(4, 2))

        def objective():
            return float(np.sum(cotangent * net.forward(x)))

        analytic = np.concatenate([g.ravel() for g in gradients(net, x, cotangent)])
        numeric = []
        h = 1e-5
        for p in net.parameters:
            for index in np.ndindex(p.shape):
                saved = p[index]
                p[index] = saved + h
                upper = objective()
                p[index] = saved - h
                lower = objective()
                p[index] = saved
                numeric.append((upper - lower) / (2 * h))
        numeric = np.array(numeric)
        error = np.linalg.norm(analytic - numeric) / (np.linalg.norm(analytic) + np.linalg.norm(numeric))
        assert error < 1e-4

    def test_dead_unit_has_no_gradient(self, rng):
        net = Mlp.initialise(3, 2, rng)
        net.parameters[1][0] = -100.0
        grads = net.gradients(rng.uniform(-1, 1, size=(5, 3)), np.ones((5, 2)))
        np.testing.assert_array_equal(grads[0][:, 0], 0.0)
        assert grads[1][0] == 0.0

    def test_cotangent_shape(self):
        with pytest.raises(ShapeMismatchException):
            Mlp(3, 2).gradients(np.zeros((4, 3)), np.zeros((4, 3)))


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        theta = [np.array([1.0, -2.0])]
        state = AdamState.for_parameters(theta, learning_rate=1e-3)
        adam_step(state, theta, [np.array([0.5, -4.0])])
        np.testing.assert_allclose(theta[0], [1.0 - 1e-3, -2.0 + 1e-3], atol=1e-8)
        assert state.step == 1

    def test_zero_gradient_leaves_parameters(self):
        theta = [np.array([1.0, 2.0])]
        state = AdamState.for_parameters(theta)
        adam_step(state, theta, [np.zeros(2)])
        np.testing.assert_array_equal(theta[0], [1.0, 2.0])

    def test_moves_monotonically_toward_minimum(self):
        theta = [np.array([0.0])]
        state = AdamState.for_parameters(theta, learning_rate=0.1)
        previous = theta[0][0]
        for _ in range(10):
            adam_step(state, theta, [2.0 * (theta[0] - 3.0)])
            assert previous < theta[0][0] < 3.0
            previous = theta[0][0]

    def test_gradient_count(self):
        theta = [np.zeros(2)]
        with pytest.raises(ShapeMismatchException):
            adam_step(AdamState.for_parameters(theta), theta, [np.zeros(2), np.zeros(2)])


class TestDoubleQ:
    def test_terminal_target_is_reward(self):
        online, target = biased_net([0.0, 1.0, 0.0, 0.0]), biased_net([5.0, 2.0, 7.0, 7.0])
        batch = TransitionBatch.from_transitions([
            Transition(np.zeros(25), 0, 1.0, 0.0, np.zeros(25)),
            Transition(np.zeros(25), 0, 0.5, 0.9, np.zeros(25)),
        ])
        # the online network picks the action, the target network scores it
        np.testing.assert_allclose(double_q_targets(online, target, batch), [1.0, 0.5 + 0.9 * 2.0])

    def test_loss_before_step(self):
        online = Mlp(25, 4)
        batch = [Transition(np.zeros(25), 2, 1.0, 0.0, np.zeros(25))]
        adam = AdamState.for_parameters(online.parameters)
        assert double_q_update(online, online.copy(), batch, adam) == pytest.approx(1.0)
        assert adam.step == 1

    def test_converges_on_a_terminal_transition(self, rng):
        online = Mlp.initialise(25, 4, rng)
        target = online.copy()
        observation = rng.integers(0, 2, size=25).astype(float)
        batch = TransitionBatch.from_transitions([Transition(observation, 1, 1.0, 0.0, observation)])
        adam = AdamState.for_parameters(online.parameters, learning_rate=1e-3)
        for _ in range(1000):
            double_q_update(online, target, batch, adam)
        assert online.forward(observation)[1] == pytest.approx(1.0, abs=1e-2)

    def test_empty_batch(self):
        with pytest.raises(EmptyBatchException):
            TransitionBatch.from_transitions([])

    def test_identical_networks_give_the_q_learning_target(self, rng):
        net = Mlp.initialise(25, 4, rng)
        transitions = [
            Transition(rng.normal(size=25), int(rng.integers(4)), float(rng.normal()), discount, rng.normal(size=25))
            for discount in (0.0, 0.9, 0.95, 0.99)
        ]
        batch = TransitionBatch.from_transitions(transitions)
        expected = batch.rewards + batch.discounts * net.forward(batch.next_observations).max(axis=1)
        np.testing.assert_allclose(double_q_targets(net, net.copy(), batch), expected)

    def test_updates_are_deterministic(self):
        def train():
            rng = np.random.default_rng(11)
            online = Mlp.initialise(25, 4, rng)
            target = online.copy()
            adam = AdamState.for_parameters(online.parameters)
            batch = [
                Transition(rng.normal(size=25), int(rng.integers(4)), 1.0, 0.9, rng.normal(size=25))
                for _ in range(8)
            ]
            for _ in range(20):
                double_q_update(online, target, batch, adam)
            return online.parameters

        for first, second in zip(train(), train()):
            np.testing.assert_array_equal(first, second)


class TestSnapshot:
    def test_save_and_load(self, rng, tmp_path):
        net = Mlp.initialise(25, 4, rng)
        path = tmp_path / "q.txt"
        save_parameters(net, path)
        assert path.read_text(encoding="utf-8").startswith("# shapes=25x20,20,20x20,20,20x4,4\n")
        loaded = load_parameters(path)
        assert (loaded.input_size, loaded.output_size) == (25, 4)
        for mine, theirs in zip(net.parameters, loaded.parameters):
            np.testing.assert_array_equal(mine, theirs)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("0.0\n1.0\n", encoding="utf-8")
        with pytest.raises(SnapshotFormatException):
            load_parameters(path)

    def test_size_mismatch(self, rng, tmp_path):
        path = tmp_path / "q.txt"
        save_parameters(Mlp(3, 2), path)
        with open(path, "a", encoding="utf-8") as f:
            f.write("1.0\n")
        with pytest.raises(SnapshotFormatException):
            load_parameters(path)
