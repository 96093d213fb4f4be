from dyna_replay_lab.envs.grid_world import (
    Action,
    GridState,
    GridWorld,
    IndexedGridWorld,
    LocalViewEncoder,
    InvalidActionException,
    InvalidStateException,
    LayoutException,
    MazeObservation,
    grid_step,
    load_layout,
    local_view,
    mean_optimal_episode_length,
    parse_layout,
    reset,
    shortest_path_length,
)
from dyna_replay_lab.envs.mrp import InvalidMrpException, MrpSpec, mrp_matrices, stationary_distribution
