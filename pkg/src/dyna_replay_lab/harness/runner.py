import logging

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from dyna_replay_lab.agents.agent import Agent, PlannerKind
from dyna_replay_lab.agents.loop import LoopConfig, run_dyna_loop
from dyna_replay_lab.agents.neural_agent import NeuralQAgent
from dyna_replay_lab.agents.tabular_agent import TabularAgent
from dyna_replay_lab.agents.tabular_q import TabularQ
from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.envs.grid_world import GridWorld, IndexedGridWorld, LocalViewEncoder, load_layout
from dyna_replay_lab.harness.config import RL_FAMILIES, ExperimentConfig
from dyna_replay_lab.harness.plot import emit_heatmap_svg, emit_svg
from dyna_replay_lab.harness.aggregate import aggregate
from dyna_replay_lab.harness.results import ExperimentException, RunRecord, write_csv
from dyna_replay_lab.models.neural_model import NeuralModel, NeuralModelLearner
from dyna_replay_lab.models.tabular import DirichletTabularModel, ModelDirection
from dyna_replay_lab.replay.buffer import ReplayBuffer
from dyna_replay_lab.stability.sweeps import RegionSweep, divergence_region_sweep, empirical_divergence_likelihood


NEURAL_REPLAY_CAPACITY: int = 10_000


@dataclass
class RunOutcome:
    experiment: str
    columns: List[str]
    rows: List[Dict[str, Any]]
    metadata: Dict[str, Any]
    records: List[RunRecord] = field(default_factory=list)
    csv_path: Optional[Path] = None
    svg_path: Optional[Path] = None
    region: Optional[RegionSweep] = None


# region Components
def build_world(settings: Mapping[str, Any]) -> GridWorld:
    return load_layout(
        settings["env.layout"],
        slip_probability=float(settings["env.slip"]),
        discount=settings["env.discount"],
        goal_reward=float(settings["env.goal_reward"]),
        num_actions=settings["env.actions"],
    )


def build_components(
        settings: Mapping[str, Any], seed: int
) -> Tuple[Any, Any, ReplayBuffer, Agent, LoopConfig]:
    """
    Environment, model, replay, agent and loop configuration of one cell.
    Network initialisation and model mini-batches draw from streams spawned
    from the seed, so the run stream itself is the same for every agent.
    """
    world: GridWorld = build_world(settings)
    planner = PlannerKind(settings["loop.planner"])
    search_depth: int = int(settings["loop.search_depth"])
    init_rng, model_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))

    env: Any
    model: Any = None
    agent: Agent
    if settings["agent.kind"] == "tabular":
        env = IndexedGridWorld(world)
        q = TabularQ.zeros(
            env.num_states, env.num_actions,
            step_size=float(settings["agent.step_size"]), epsilon=float(settings["agent.epsilon"]),
        )
        agent = TabularAgent(q)
        direction: Optional[ModelDirection] = None
        if planner is PlannerKind.FORWARD_DYNA or search_depth > 0:
            direction = ModelDirection.FORWARD
        elif planner is PlannerKind.BACKWARD_DYNA:
            direction = ModelDirection.BACKWARD
        if direction is not None:
            model = DirichletTabularModel(
                direction, env.num_states, env.num_actions,
                reward_support=(0.0, world.goal_reward),
                discount_support=(0.0, world.discount),
                prior_concentration=float(settings["agent.prior"]),
            )
        replay = ReplayBuffer(capacity=settings["agent.replay_capacity"])
    else:
        env = world
        agent = NeuralQAgent.create(
            world, init_rng,
            epsilon=float(settings["agent.epsilon"]),
            batch_size=int(settings["agent.batch_size"]),
            target_update_interval=int(settings["agent.target_update"]),
            learning_rate=float(settings["agent.learning_rate"]),
        )
        replay = ReplayBuffer(capacity=settings["agent.replay_capacity"] or NEURAL_REPLAY_CAPACITY)
        if planner is PlannerKind.FORWARD_DYNA:
            model = NeuralModelLearner(
                NeuralModel(world.num_actions, world.discount, init_rng),
                replay, LocalViewEncoder(world), model_rng,
                batch_size=int(settings["agent.batch_size"]),
                learning_rate=float(settings["agent.learning_rate"]),
            )

    loop = LoopConfig(
        iterations=int(settings["loop.iterations"]),
        interactions=int(settings["loop.interactions"]),
        planning_steps=int(settings["loop.planning_steps"]),
        planner=planner,
        search_depth=search_depth,
        episode_budget=int(settings["run.episodes"]),
        max_episode_steps=settings["loop.max_episode_steps"],
    )
    return env, model, replay, agent, loop
# endregion


def run_cell(config: ExperimentConfig, seed: int, sweep_value: Any = None, series_value: Any = None) -> RunRecord:
    """
    Runs one (seed, sweep value, series value) cell from a fresh stream
    ``default_rng(seed)``.

    :raises ExperimentException: wrapping any failure of the cell
    """
    settings: Dict[str, Any] = config.cell_settings(sweep_value, series_value)
    try:
        env, model, replay, agent, loop = build_components(settings, seed)
        trace = run_dyna_loop(env, model, replay, agent, loop, np.random.default_rng(seed))
    except GeneralException as e:
        raise ExperimentException(
            f"Cell seed={seed} sweep={sweep_value} series={series_value} of {config.experiment} failed : {e}"
        )
    if trace.episodes < loop.episode_budget:
        logging.warning(
            f"{config.experiment} seed={seed} sweep={sweep_value} series={series_value} completed "
            f"{trace.episodes} of {loop.episode_budget} episodes"
        )
    return RunRecord(
        experiment=config.experiment,
        seed=seed,
        sweep_value=sweep_value,
        series=series_value,
        episode_lengths=trace.episode_lengths,
        episode_returns=trace.episode_returns,
        total_steps=trace.total_steps,
    )


def _run_cell_args(args: Tuple[ExperimentConfig, int, Any, Any]) -> RunRecord:
    return run_cell(*args)


def run_records(config: ExperimentConfig) -> List[RunRecord]:
    """
    Every cell of the experiment, in ``config.cells()`` order whatever the
    number of workers.
    """
    work = [(config, seed, x, label) for seed, x, label in config.cells()]
    workers: int = int(config.settings["run.workers"])
    logging.info(f"{config.experiment} : {len(work)} cells on {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell_args, work))
    return [_run_cell_args(args) for args in work]


# region Families
def _learning_table(config: ExperimentConfig, records: List[RunRecord]) -> Tuple[List[str], List[Dict[str, Any]], Dict[str, Any]]:
    series: Optional[str] = config.series_name
    leading: List[str] = ["seed"] + ([series] if series else [])
    rows: List[Dict[str, Any]] = []
    if config.family == "planners":
        x_name, y_name = "episode", "steps"
        for record in records:
            for episode, length in enumerate(record.episode_lengths, start=1):
                row: Dict[str, Any] = {"seed": record.seed, x_name: episode, y_name: length}
                if series:
                    row[series] = record.series
                rows.append(row)
    else:
        x_name, y_name = config.sweep_name, f"total_steps_{config.settings['run.episodes']}_episodes"
        for record in records:
            row = {"seed": record.seed, x_name: record.sweep_value, y_name: record.total_steps}
            if series:
                row[series] = record.series
            rows.append(row)
    return leading + [x_name, y_name], rows, {"x": x_name, "y": y_name, "series": series}


def _run_learning(config: ExperimentConfig) -> RunOutcome:
    records: List[RunRecord] = run_records(config)
    columns, rows, axes = _learning_table(config, records)
    return RunOutcome(config.experiment, columns, rows, axes, records=records)


def _run_region(config: ExperimentConfig) -> RunOutcome:
    s = config.settings
    sweep = divergence_region_sweep(
        discount=float(s["mrp.discount"]),
        d1_resolution=int(s["mrp.d1_resolution"]),
        p_resolution=int(s["mrp.p_resolution"]),
        step_size=float(s["mrp.step_size"]),
        td_steps=int(s["mrp.td_steps"]),
    )
    if sweep.td_diverged is not None and np.any(sweep.td_diverged != sweep.divergent):
        logging.warning(f"{int((sweep.td_diverged != sweep.divergent).sum())} cells disagree with iterated TD")
    return RunOutcome(
        config.experiment, ["d1", "p", "A", "verdict"], sweep.rows(), {"x": "p", "y": "d1"}, region=sweep
    )


def _run_likelihood(config: ExperimentConfig) -> RunOutcome:
    s = config.settings
    curve = empirical_divergence_likelihood(
        np.random.default_rng(config.seeds[0]),
        transition_probability=float(s["mrp.p"]),
        sample_sizes=[int(n) for n in s["mrp.sample_sizes"]],
        trials=int(s["mrp.trials"]),
        discount=float(s["mrp.discount"]),
        step_size=float(s["mrp.step_size"]),
    )
    rows = [
        {"samples": n, "likelihood": float(v), "standard_error": float(e)}
        for n, v, e in zip(curve.sample_sizes, curve.likelihoods, curve.standard_errors)
    ]
    return RunOutcome(
        config.experiment, ["samples", "likelihood", "standard_error"], rows, {"x": "samples", "y": "likelihood"}
    )
# endregion


def run(config: ExperimentConfig, write: bool = True) -> RunOutcome:
    """
    Executes every cell of the experiment and writes ``<output.dir>/<experiment>.csv``
    and, with ``write``, its SVG figure.

    :raises ExperimentException: when a cell fails
    """
    logging.info(f"running {config.experiment} ({config.family})")
    if config.family in RL_FAMILIES:
        outcome = _run_learning(config)
    elif config.family == "stability_region":
        outcome = _run_region(config)
    else:
        outcome = _run_likelihood(config)

    outcome.metadata.update(
        experiment=config.experiment,
        statistic=config.settings["output.statistic"],
        error=config.settings["output.error"],
    )
    if not write:
        return outcome

    directory: Path = config.output_dir
    outcome.csv_path = write_csv(directory / f"{config.experiment}.csv", outcome.metadata, outcome.columns, outcome.rows)
    svg_path: Path = directory / f"{config.experiment}.svg"
    if config.family == "stability_region":
        outcome.svg_path = emit_heatmap_svg(outcome.region, svg_path)
    else:
        summary = aggregate(
            outcome.rows,
            x=outcome.metadata["x"],
            y=outcome.metadata["y"],
            series=outcome.metadata.get("series"),
            statistic=config.settings["output.statistic"],
            error=config.settings["output.error"],
        )
        outcome.svg_path = emit_svg(
            summary, svg_path,
            x_label=outcome.metadata["x"], y_label=outcome.metadata["y"],
            logx=bool(config.settings["plot.logx"]), logy=bool(config.settings["plot.logy"]),
            title=config.experiment,
        )
    logging.info(f"finished {config.experiment}")
    return outcome
