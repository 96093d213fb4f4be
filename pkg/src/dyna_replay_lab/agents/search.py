import logging

from dataclasses import dataclass

import numpy as np

from dyna_replay_lab.agents.tabular_q import TabularQ
from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.models.tabular import DirichletTabularModel


# share of the leaf mass a state needs to count as a distinct leaf
DISTINCT_LEAF_MASS: float = 1e-6


class SearchDepthException(GeneralException):
    pass


@dataclass(frozen=True)
class PlanValues:
    """
    Result of a breadth-first search from one state.

    :param values: planned value of every root action
    :param leaf_count: leaf evaluations of the expanded tree; branches that
        end in a terminal transition are not expanded further
    :param distinct_leaves: distinct states among those leaves
    """

    values: np.ndarray
    leaf_count: int
    distinct_leaves: int


def bfs_plan(q: TabularQ, model: DirichletTabularModel, state: int, depth: int) -> PlanValues:
    """
    Expands every action sequence of length ``depth`` from ``state`` through
    the model's expectation tables, evaluates leaves with max_a Q(leaf, a) and
    backs values up with r + gamma * sum_s' P(s' | s, a) * max over children,
    all under posterior means.

    The tree is evaluated layer by layer: identical subtrees share one value
    per (state, remaining depth), so the work is S * A * S per layer however
    large the tree. Nodes are counted by pushing their multiplicity through
    the same tables, so the count stays a count of the tree and not of the
    layers.

    :param q: bootstrap values
    :type q: TabularQ
    :param model: forward model
    :type model: DirichletTabularModel
    :param state: root state index
    :type state: int
    :param depth: search depth, 0 returns Q(state, .)
    :type depth: int
    :raises SearchDepthException: for a negative depth
    :raises ModelDirectionException: for a backward model
    :return: per-action planned values
    :rtype: PlanValues
    """
    if depth < 0:
        raise SearchDepthException(f"Search depth must be non-negative : {depth}")
    if depth == 0:
        return PlanValues(values=q.values[state].copy(), leaf_count=1, distinct_leaves=1)

    successors, rewards, discounts = model.expected_tables()
    # value of every state with k steps of search left, starting from the leaves
    state_values: np.ndarray = q.values.max(axis=1)
    for _ in range(depth - 1):
        state_values = (rewards + discounts * (successors @ state_values)).max(axis=1)
    root: np.ndarray = rewards[state] + discounts[state] * (successors[state] @ state_values)

    # expected number of tree nodes sitting in each state, layer by layer
    continuation: np.ndarray = model.continuation_probabilities()
    frontier: np.ndarray = np.zeros(len(state_values))
    frontier[state] = 1.0
    for _ in range(depth):
        frontier = np.einsum("s,sa,sat->t", frontier, continuation, successors)
    leaves: float = float(frontier.sum())
    distinct: int = int(np.count_nonzero(frontier > DISTINCT_LEAF_MASS * leaves)) if leaves > 0.0 else 0
    logging.debug(f"bfs from {state} depth {depth} : {leaves:.1f} leaves, {distinct} distinct")
    return PlanValues(values=root, leaf_count=int(round(leaves)), distinct_leaves=distinct)
