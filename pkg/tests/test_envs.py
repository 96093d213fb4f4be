from collections import Counter

import numpy as np
import pytest

from conftest import cell
from dyna_replay_lab.envs import (
    Action,
    GridState,
    IndexedGridWorld,
    InvalidActionException,
    InvalidMrpException,
    InvalidStateException,
    LayoutException,
    LocalViewEncoder,
    MrpSpec,
    grid_step,
    load_layout,
    local_view,
    mean_optimal_episode_length,
    mrp_matrices,
    parse_layout,
    reset,
    shortest_path_length,
    stationary_distribution,
)


class TestLayouts:
    def test_shipped_layouts(self, dyna_maze, four_rooms):
        assert (dyna_maze.width, dyna_maze.height) == (9, 6)
        assert dyna_maze.start == cell(2, 0)
        assert dyna_maze.goal == cell(0, 8)
        assert dyna_maze.discount == 0.95
        assert dyna_maze.num_actions == 4
        assert len(dyna_maze.free_cells) == 47

        assert (four_rooms.width, four_rooms.height) == (13, 13)
        assert four_rooms.start is None
        assert four_rooms.goal == cell(11, 11)
        assert four_rooms.discount == 0.99
        assert four_rooms.num_actions == 5
        assert len(four_rooms.free_cells) == 104

    def test_ragged_layout_rejected(self):
        with pytest.raises(LayoutException):
            parse_layout("S..\n..\n..G\n")

    def test_unknown_character_rejected(self):
        with pytest.raises(LayoutException):
            parse_layout("S.x\n..G\n")

    def test_layout_needs_one_goal(self):
        with pytest.raises(LayoutException):
            parse_layout("S..\n...\n")

    def test_load_by_path(self, tmp_path):
        path = tmp_path / "corridor.txt"
        path.write_text("S...G\n", encoding="utf-8")
        world = load_layout(path)
        assert shortest_path_length(world) == 4

    def test_missing_layout(self):
        with pytest.raises(LayoutException):
            load_layout("no_such_layout")


class TestGridStep:
    def test_wall_is_a_no_op(self, dyna_maze, rng):
        t = grid_step(dyna_maze, cell(1, 1), Action.RIGHT, rng)
        assert t.next_state == cell(1, 1)
        assert t.reward == 0.0
        assert t.discount == 0.95

    def test_edge_is_a_no_op(self, dyna_maze, rng):
        t = grid_step(dyna_maze, cell(2, 0), Action.LEFT, rng)
        assert t.next_state == cell(2, 0)

    def test_entering_goal_terminates(self, four_rooms, rng):
        t = grid_step(four_rooms, cell(11, 10), Action.RIGHT, rng)
        assert t.next_state == four_rooms.goal
        assert t.reward == 1.0
        assert t.discount == 0.0
        assert t.is_terminal

    def test_noop_action(self, four_rooms, rng):
        assert grid_step(four_rooms, cell(3, 3), Action.NOOP, rng).next_state == cell(3, 3)

    def test_invalid_action(self, dyna_maze, rng):
        with pytest.raises(InvalidActionException):
            grid_step(dyna_maze, cell(2, 0), 4, rng)

    def test_wall_state(self, dyna_maze, rng):
        with pytest.raises(InvalidStateException):
            grid_step(dyna_maze, cell(1, 2), Action.UP, rng)

    def test_goal_state_is_terminal(self, dyna_maze, rng):
        with pytest.raises(InvalidStateException):
            grid_step(dyna_maze, dyna_maze.goal, Action.UP, rng)

    def test_deterministic_world_ignores_stream(self, four_rooms):
        first = np.random.default_rng(1)
        second = np.random.default_rng(2)
        for state in four_rooms.start_cells[:20]:
            for action in range(four_rooms.num_actions):
                assert grid_step(four_rooms, state, action, first) == grid_step(four_rooms, state, action, second)

    def test_slip_frequency(self, slippery_four_rooms, rng):
        state = cell(2, 2)
        neighbours = slippery_four_rooms.free_neighbours(state)
        assert len(neighbours) == 4
        trials = 100_000
        hits = sum(
            grid_step(slippery_four_rooms, state, Action.RIGHT, rng).next_state == cell(2, 3)
            for _ in range(trials)
        )
        assert abs(hits / trials - (0.8 + 0.2 / 4)) < 0.01

    def test_slip_stays_adjacent(self, rng):
        world = load_layout("four_rooms", slip_probability=1.0)
        for state in world.start_cells:
            t = grid_step(world, state, Action.NOOP, rng)
            assert t.next_state in world.free_neighbours(state) or t.next_state == state


class TestReset:
    def test_dyna_maze_fixed_start(self, dyna_maze, rng):
        assert all(reset(dyna_maze, rng) == dyna_maze.start for _ in range(100))

    def test_four_rooms_uniform_start(self, four_rooms, rng):
        draws = 10_000
        counts = Counter(reset(four_rooms, rng) for _ in range(draws))
        cells = four_rooms.start_cells
        assert set(counts) == set(cells)
        assert four_rooms.goal not in counts
        expected = draws / len(cells)
        sigma = np.sqrt(draws * (1 / len(cells)) * (1 - 1 / len(cells)))
        assert max(abs(counts[c] - expected) for c in cells) < 4.5 * sigma


class TestLocalView:
    def test_open_area(self, four_rooms):
        assert not local_view(four_rooms, cell(3, 3)).any()

    def test_corner(self, dyna_maze):
        view = local_view(dyna_maze, cell(0, 0)).reshape(5, 5)
        assert view[:2].all()
        assert view[:, :2].all()

    def test_start_window(self, dyna_maze):
        expected = np.array([
            [1, 1, 0, 0, 0],
            [1, 1, 0, 0, 1],
            [1, 1, 0, 0, 1],
            [1, 1, 0, 0, 1],
            [1, 1, 0, 0, 0],
        ], dtype=float)
        np.testing.assert_array_equal(local_view(dyna_maze, dyna_maze.start), expected.ravel())

    def test_encoder(self, dyna_maze, rng):
        encoder = LocalViewEncoder(dyna_maze)
        t = encoder.encode(grid_step(dyna_maze, dyna_maze.start, Action.UP, rng))
        assert t.state.shape == (25,)
        np.testing.assert_array_equal(t.next_state, local_view(dyna_maze, cell(1, 0)))


class TestOracles:
    def test_dyna_maze_shortest_path(self, dyna_maze):
        assert shortest_path_length(dyna_maze) == 14

    def test_randomized_start_needs_a_cell(self, four_rooms):
        with pytest.raises(InvalidStateException):
            shortest_path_length(four_rooms)
        assert shortest_path_length(four_rooms, cell(11, 10)) == 1

    def test_mean_optimal_episode_length(self, four_rooms):
        lengths = [shortest_path_length(four_rooms, c) for c in four_rooms.start_cells]
        assert mean_optimal_episode_length(four_rooms) == pytest.approx(np.mean(lengths))


class TestIndexedGridWorld:
    def test_indices(self, indexed_four_rooms):
        env = indexed_four_rooms
        assert env.num_states == 104
        assert env.state_at(env.goal_index) == env.world.goal
        for index, state in enumerate(env.cells):
            assert env.index_of(state) == index

    def test_step_uses_indices(self, indexed_four_rooms, rng):
        env = indexed_four_rooms
        s = env.index_of(GridState(11, 10))
        t = env.step(s, Action.RIGHT, rng)
        assert t.next_state == env.goal_index
        assert t.is_terminal

    def test_wall_index(self, indexed_four_rooms):
        with pytest.raises(InvalidStateException):
            indexed_four_rooms.index_of((0, 0))


class TestMrp:
    def test_always_first_state(self):
        transition, features = mrp_matrices(MrpSpec(1.0))
        np.testing.assert_array_equal(transition, [[1.0, 1.0], [0.0, 0.0]])
        np.testing.assert_array_equal(features, [[1.0], [2.0]])

    def test_uniform(self):
        transition, _ = mrp_matrices(MrpSpec(0.5))
        np.testing.assert_array_equal(transition, np.full((2, 2), 0.5))

    def test_stationary_distribution(self):
        spec = MrpSpec(0.3)
        d = stationary_distribution(spec)
        transition, _ = mrp_matrices(spec)
        np.testing.assert_allclose(d, [0.3, 0.7])
        np.testing.assert_allclose(transition @ d, d)

    @pytest.mark.parametrize("p", np.linspace(0.0, 1.0, 11))
    def test_column_stochastic(self, p):
        transition, _ = mrp_matrices(MrpSpec(p))
        np.testing.assert_allclose(transition.sum(axis=0), 1.0)

    def test_invalid_probability(self):
        with pytest.raises(InvalidMrpException):
            MrpSpec(1.5)
