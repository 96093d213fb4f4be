import logging

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition


LAYOUT_DIR: Path = Path(__file__).parent / "layouts"

# layout name -> (discount, number of actions)
LAYOUT_DEFAULTS: Dict[str, Tuple[float, int]] = {
    "dyna_maze": (0.95, 4),
    "four_rooms": (0.99, 5),
}

VIEW_RADIUS: int = 2  # 5x5 window

# binary local view, walls and out-of-bounds cells are 1
MazeObservation = np.ndarray


class LayoutException(GeneralException):
    """
    Raised for ragged or malformed layout files and inconsistent worlds.
    """
    pass


class InvalidActionException(GeneralException):
    pass


class InvalidStateException(GeneralException):
    """
    Raised when a state is out of bounds, on a wall, or terminal where a
    non-terminal state is required.
    """
    pass


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    NOOP = 4  # four rooms only


MOVES: Dict[int, Tuple[int, int]] = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
    Action.NOOP: (0, 0),
}


class GridState(NamedTuple):
    row: int
    column: int


@dataclass(frozen=True)
class GridWorld:
    """
    Layout plus dynamics of a grid world. Instances are immutable, so any
    number of concurrent rollouts may share one world; randomness is always
    supplied by the caller.

    :param width: number of columns
    :type width: int
    :param height: number of rows
    :type height: int
    :param walls: wall cells
    :type walls: FrozenSet[GridState]
    :param start: fixed start cell, or None for a start drawn uniformly from the
        free non-goal cells on every reset
    :type start: Optional[GridState]
    :param goal: the terminal cell
    :type goal: GridState
    :param slip_probability: probability of moving to a random adjacent free
        cell irrespective of the action
    :type slip_probability: float
    :param discount: discount on non-terminal transitions
    :type discount: float
    :param goal_reward: reward on entering the goal
    :type goal_reward: float
    :param num_actions: 4 (cardinal moves) or 5 (cardinal moves plus no-op)
    :type num_actions: int
    """

    width: int
    height: int
    walls: FrozenSet[GridState]
    start: Optional[GridState]
    goal: GridState
    slip_probability: float = 0.0
    discount: float = 0.95
    goal_reward: float = 1.0
    num_actions: int = 4
    name: str = field(default="grid", compare=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise LayoutException(f"Grid must be non-empty : {self.width}x{self.height}")
        for wall in self.walls:
            if not self.in_bounds(wall):
                raise LayoutException(f"Wall {wall} lies outside the {self.width}x{self.height} grid")
        if not self.in_bounds(self.goal) or self.goal in self.walls:
            raise LayoutException(f"Goal {self.goal} must be an in-bounds free cell")
        if self.start is not None:
            if not self.in_bounds(self.start) or self.start in self.walls:
                raise LayoutException(f"Start {self.start} must be an in-bounds free cell")
            if self.start == self.goal:
                raise LayoutException("Start and goal must differ")
        if not 0.0 <= self.slip_probability <= 1.0:
            raise LayoutException(f"slip_probability must lie in [0, 1] : {self.slip_probability}")
        if not 0.0 <= self.discount <= 1.0:
            raise LayoutException(f"discount must lie in [0, 1] : {self.discount}")
        if self.num_actions not in (4, 5):
            raise LayoutException(f"num_actions must be 4 or 5 : {self.num_actions}")

    def in_bounds(self, cell: Tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_free(self, cell: Tuple[int, int]) -> bool:
        return self.in_bounds(cell) and GridState(*cell) not in self.walls

    @cached_property
    def free_cells(self) -> List[GridState]:
        """
        Free cells in row-major order, goal included.
        """
        return [
            GridState(row, column)
            for row in range(self.height)
            for column in range(self.width)
            if GridState(row, column) not in self.walls
        ]

    @cached_property
    def start_cells(self) -> List[GridState]:
        """
        Support of the reset distribution.
        """
        if self.start is not None:
            return [self.start]
        return [cell for cell in self.free_cells if cell != self.goal]

    def free_neighbours(self, state: GridState) -> List[GridState]:
        """
        Adjacent (4-neighbourhood) cells that are in bounds and not walls.
        """
        neighbours: List[GridState] = []
        for action in (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT):
            d_row, d_column = MOVES[action]
            cell = GridState(state.row + d_row, state.column + d_column)
            if self.is_free(cell):
                neighbours.append(cell)
        return neighbours

    def move(self, state: GridState, action: int) -> GridState:
        """
        Deterministic effect of an action; moving into a wall or off the grid
        leaves the cell unchanged.
        """
        d_row, d_column = MOVES[action]
        cell = GridState(state.row + d_row, state.column + d_column)
        return cell if self.is_free(cell) else state

    def check_state(self, state: GridState) -> None:
        if not self.in_bounds(state):
            raise InvalidStateException(f"State {state} is out of bounds")
        if state in self.walls:
            raise InvalidStateException(f"State {state} is a wall")

    # region Dynamics
    def reset(self, rng: np.random.Generator) -> GridState:
        return reset(world=self, rng=rng)

    def step(self, state: GridState, action: int, rng: np.random.Generator) -> Transition:
        return grid_step(world=self, state=state, action=action, rng=rng)
    # endregion


def reset(world: GridWorld, rng: np.random.Generator) -> GridState:
    """
    Initial state of an episode: the fixed start cell if the layout has one,
    otherwise a uniformly random free non-goal cell.

    :param world:
    :type world: GridWorld
    :param rng: random stream
    :type rng: np.random.Generator
    :return: the initial state
    :rtype: GridState
    """
    if world.start is not None:
        return world.start
    cells: List[GridState] = world.start_cells
    return cells[int(rng.integers(len(cells)))]


def grid_step(world: GridWorld, state: GridState, action: int, rng: np.random.Generator) -> Transition:
    """
    Samples one transition. With probability ``slip_probability`` the agent
    moves to a uniformly random adjacent free cell ignoring the action;
    otherwise it moves per the action. Entering the goal yields the goal reward
    and discount 0, every other transition reward 0 and the world discount.

    The random stream is only consumed when the world can slip, so a
    deterministic world is a pure function of (state, action).

    :param world:
    :type world: GridWorld
    :param state: a valid non-terminal state
    :type state: GridState
    :param action: action index in [0, num_actions)
    :type action: int
    :param rng: random stream
    :type rng: np.random.Generator
    :raises InvalidActionException: for an action index outside the action set
    :raises InvalidStateException: for a wall, out-of-bounds or goal state
    :return: the sampled transition
    :rtype: Transition
    """
    if not 0 <= int(action) < world.num_actions:
        raise InvalidActionException(
            f"Action {action} is not in the action set of size {world.num_actions}"
        )
    world.check_state(state)
    if state == world.goal:
        raise InvalidStateException(f"State {state} is terminal")

    next_state: GridState
    if world.slip_probability > 0.0 and rng.random() < world.slip_probability:
        neighbours: List[GridState] = world.free_neighbours(state)
        next_state = neighbours[int(rng.integers(len(neighbours)))] if neighbours else state
    else:
        next_state = world.move(state, int(action))

    if next_state == world.goal:
        return Transition(state, int(action), world.goal_reward, 0.0, next_state)
    return Transition(state, int(action), 0.0, world.discount, next_state)


def local_view(world: GridWorld, state: GridState) -> MazeObservation:
    """
    Row-major 5x5 window centred on the agent; walls and cells beyond the
    grid are 1, free cells 0.

    :param world:
    :type world: GridWorld
    :param state:
    :type state: GridState
    :return: observation vector of length 25
    :rtype: np.ndarray
    """
    world.check_state(state)
    view: np.ndarray = np.zeros(((2 * VIEW_RADIUS + 1) ** 2,), dtype=float)
    i = 0
    for d_row in range(-VIEW_RADIUS, VIEW_RADIUS + 1):
        for d_column in range(-VIEW_RADIUS, VIEW_RADIUS + 1):
            if not world.is_free((state.row + d_row, state.column + d_column)):
                view[i] = 1.0
            i += 1
    return view


# region Layout files
def parse_layout(
        text: str,
        slip_probability: float = 0.0,
        discount: float = 0.95,
        goal_reward: float = 1.0,
        num_actions: int = 4,
        name: str = "grid",
) -> GridWorld:
    """
    Builds a world from ASCII rows: '#' wall, '.' free, 'S' start, 'G' goal.
    A layout without 'S' has a randomized start.

    :raises LayoutException: ragged rows, unknown characters, or a missing or
        repeated goal/start
    """
    rows: List[str] = [line.rstrip("\r") for line in text.splitlines() if line.strip()]
    if not rows:
        raise LayoutException("Layout is empty")
    width: int = len(rows[0])
    walls: set = set()
    starts: List[GridState] = []
    goals: List[GridState] = []
    for row, line in enumerate(rows):
        if len(line) != width:
            raise LayoutException(
                f"Ragged layout : row {row} has {len(line)} cells ; expected {width}"
            )
        for column, char in enumerate(line):
            cell = GridState(row, column)
            if char == "#":
                walls.add(cell)
            elif char == "S":
                starts.append(cell)
            elif char == "G":
                goals.append(cell)
            elif char != ".":
                raise LayoutException(f"Unknown layout character {char!r} at {cell}")
    if len(goals) != 1:
        raise LayoutException(f"Layout needs exactly one goal ; found {len(goals)}")
    if len(starts) > 1:
        raise LayoutException(f"Layout has {len(starts)} start cells ; expected at most one")
    return GridWorld(
        width=width,
        height=len(rows),
        walls=frozenset(walls),
        start=starts[0] if starts else None,
        goal=goals[0],
        slip_probability=slip_probability,
        discount=discount,
        goal_reward=goal_reward,
        num_actions=num_actions,
        name=name,
    )


def load_layout(
        name_or_path: Union[str, Path],
        slip_probability: float = 0.0,
        discount: Optional[float] = None,
        goal_reward: float = 1.0,
        num_actions: Optional[int] = None,
) -> GridWorld:
    """
    Loads a shipped layout by name ("dyna_maze", "four_rooms") or any layout
    file by path. Discount and action count default per shipped layout.

    :param name_or_path:
    :type name_or_path: str | Path
    :return:
    :rtype: GridWorld
    """
    path = Path(name_or_path)
    name: str = path.stem
    if str(name_or_path) in LAYOUT_DEFAULTS:
        path = LAYOUT_DIR / f"{name_or_path}.txt"
    default_discount, default_actions = LAYOUT_DEFAULTS.get(name, (0.95, 4))
    try:
        text: str = path.read_text(encoding="utf-8")
    except OSError as e:
        raise LayoutException(f"Could not read layout {name_or_path} : {e}")
    logging.debug(f"loading layout {name} from {path}")
    return parse_layout(
        text,
        slip_probability=slip_probability,
        discount=default_discount if discount is None else discount,
        goal_reward=goal_reward,
        num_actions=default_actions if num_actions is None else num_actions,
        name=name,
    )
# endregion


# region Breadth-first oracles
def _distances_to_goal(world: GridWorld) -> Dict[GridState, int]:
    # grid moves are reversible, so a search from the goal gives every distance
    distances: Dict[GridState, int] = {world.goal: 0}
    frontier: deque = deque([world.goal])
    while frontier:
        cell = frontier.popleft()
        for neighbour in world.free_neighbours(cell):
            if neighbour not in distances:
                distances[neighbour] = distances[cell] + 1
                frontier.append(neighbour)
    return distances


def shortest_path_length(world: GridWorld, start: Optional[GridState] = None) -> int:
    """
    Number of deterministic steps on the shortest path from ``start`` (the
    layout start by default) to the goal.

    :raises InvalidStateException: when the goal is unreachable
    """
    origin: Optional[GridState] = world.start if start is None else start
    if origin is None:
        raise InvalidStateException("World has a randomized start ; pass a start cell")
    world.check_state(origin)
    distances = _distances_to_goal(world)
    if origin not in distances:
        raise InvalidStateException(f"Goal is unreachable from {origin}")
    return distances[origin]


def mean_optimal_episode_length(world: GridWorld) -> float:
    """
    Mean shortest-path length over the reset distribution.
    """
    distances = _distances_to_goal(world)
    lengths: List[int] = [distances[cell] for cell in world.start_cells if cell in distances]
    return float(np.mean(lengths))
# endregion


class IndexedGridWorld:
    """
    State-index view of a GridWorld for tabular agents. Free cells are indexed
    in row-major order; ``reset`` and ``step`` produce integer states.
    """

    def __init__(self, world: GridWorld):
        super().__init__()
        self.world: GridWorld = world
        self.cells: List[GridState] = list(world.free_cells)
        self._index: Dict[GridState, int] = {cell: i for i, cell in enumerate(self.cells)}

    @property
    def num_states(self) -> int:
        return len(self.cells)

    @property
    def num_actions(self) -> int:
        return self.world.num_actions

    @property
    def goal_index(self) -> int:
        return self._index[self.world.goal]

    def index_of(self, state: GridState) -> int:
        try:
            return self._index[GridState(*state)]
        except KeyError:
            raise InvalidStateException(f"State {state} is not a free cell")

    def state_at(self, index: int) -> GridState:
        return self.cells[index]

    def reset(self, rng: np.random.Generator) -> int:
        return self._index[reset(self.world, rng)]

    def step(self, state: int, action: int, rng: np.random.Generator) -> Transition:
        t: Transition = grid_step(self.world, self.cells[state], action, rng)
        return Transition(
            self._index[t.state], t.action, t.reward, t.discount, self._index[t.next_state]
        )


class LocalViewEncoder:
    """
    Memoised ``local_view`` for one world; neural agents see only these
    25-vectors.
    """

    def __init__(self, world: GridWorld):
        super().__init__()
        self.world: GridWorld = world
        self._cache: Dict[GridState, np.ndarray] = {}

    @property
    def size(self) -> int:
        return (2 * VIEW_RADIUS + 1) ** 2

    def __call__(self, state: GridState) -> MazeObservation:
        view = self._cache.get(state)
        if view is None:
            view = local_view(self.world, state)
            view.setflags(write=False)
            self._cache[state] = view
        return view

    def encode(self, t: Transition) -> Transition:
        """
        The same transition with both states replaced by their observations.
        """
        return Transition(self(t.state), t.action, t.reward, t.discount, self(t.next_state))
