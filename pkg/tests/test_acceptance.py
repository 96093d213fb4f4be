import os

import numpy as np
import pytest

from dyna_replay_lab.envs import mean_optimal_episode_length
from dyna_replay_lab.harness import ExperimentConfig, aggregate, run
from dyna_replay_lab.harness.runner import build_world


pytestmark = pytest.mark.slow

WORKERS: int = max(1, min(8, os.cpu_count() or 1))


def builtin(name, **settings):
    config = ExperimentConfig.builtin(name)
    mapping = dict(config.settings)
    mapping.update({"run.workers": WORKERS, **settings})
    return ExperimentConfig.from_mapping(mapping)


def by_series(summary):
    table = {}
    for row in summary:
        table.setdefault(row.series, {})[row.x] = row
    return table


def test_deeper_search_beats_q_learning():
    outcome = run(builtin("fig2_depth_sweep", **{"sweep.values": [0, 4, 6]}), write=False)
    summary = {row.x: row for row in aggregate(outcome.rows, outcome.metadata["x"], outcome.metadata["y"])}
    for depth in (4, 6):
        assert summary[depth].upper < summary[0].lower


def test_backward_dyna_learns_faster_when_deterministic():
    outcome = run(builtin("fig2_planners_det"), write=False)
    summary = by_series(aggregate(outcome.rows, "episode", "steps", series="planner"))
    backward = np.median([summary["backward-dyna"][e].statistic for e in range(1, 201)])
    forward = np.median([summary["forward-dyna"][e].statistic for e in range(1, 201)])
    assert backward < forward


def test_slippery_rooms_separate_replay_from_forward_dyna():
    config = builtin("fig2_planners_stoch")
    outcome = run(config, write=False)
    optimal = mean_optimal_episode_length(build_world(config.settings))

    final = {}
    for record in outcome.records:
        final.setdefault(record.series, []).append(np.mean(record.episode_lengths[-100:]))
    late = {planner: float(np.median(lengths)) for planner, lengths in final.items()}

    assert late["replay"] <= 2 * optimal
    assert late["backward-dyna"] <= 2 * optimal
    assert late["forward-dyna"] > 2 * optimal


def test_more_updates_per_step_never_hurt():
    outcome = run(builtin("fig1_updates_sweep"), write=False)
    summary = by_series(aggregate(outcome.rows, outcome.metadata["x"], outcome.metadata["y"], series="planner"))
    updates = [1, 2, 4, 8, 16]
    for planner in ("replay", "forward-dyna"):
        medians = [summary[planner][u].statistic for u in updates]
        assert all(later <= earlier for earlier, later in zip(medians, medians[1:])), planner
    for u in updates:
        replay, forward = summary["replay"][u].statistic, summary["forward-dyna"][u].statistic
        assert max(replay, forward) <= 3 * min(replay, forward)
