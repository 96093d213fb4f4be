import logging

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from dyna_replay_lab.core.exceptions import GeneralException


class ConfigException(GeneralException):
    pass


RL_FAMILIES: Tuple[str, ...] = ("updates_sweep", "depth_sweep", "planners")
STABILITY_FAMILIES: Tuple[str, ...] = ("stability_region", "stability_likelihood")
FAMILIES: Tuple[str, ...] = RL_FAMILIES + STABILITY_FAMILIES

AGENT_KINDS: Tuple[str, ...] = ("tabular", "neural")
STATISTICS: Tuple[str, ...] = ("median", "mean")
ERRORS: Tuple[str, ...] = ("interquartile", "standard-error")

# every recognised key with its default; ``experiment`` and ``family`` have none
DEFAULTS: Dict[str, Any] = {
    "env.layout": "four_rooms",
    "env.slip": 0.0,
    "env.discount": None,
    "env.actions": None,
    "env.goal_reward": 1.0,
    "agent.kind": "tabular",
    "agent.step_size": 0.1,
    "agent.epsilon": 0.1,
    "agent.prior": 1.0,
    "agent.replay_capacity": None,
    "agent.batch_size": 32,
    "agent.target_update": 100,
    "agent.learning_rate": 1e-3,
    "loop.iterations": 1_000_000,
    "loop.interactions": 1,
    "loop.planning_steps": 0,
    "loop.planner": "none",
    "loop.search_depth": 0,
    "loop.max_episode_steps": None,
    "run.seeds": list(range(20)),
    "run.episodes": 100,
    "run.workers": 1,
    "sweep.key": None,
    "sweep.values": None,
    "sweep.name": None,
    "series.key": None,
    "series.values": None,
    "series.name": None,
    "mrp.discount": 0.99,
    "mrp.step_size": 0.01,
    "mrp.d1_resolution": 101,
    "mrp.p_resolution": 101,
    "mrp.td_steps": 0,
    "mrp.p": 0.5,
    "mrp.sample_sizes": [1, 10, 100, 1000],
    "mrp.trials": 10_000,
    "output.dir": "results",
    "output.statistic": "median",
    "output.error": "interquartile",
    "plot.logx": False,
    "plot.logy": False,
}

# keys a sweep or series may not vary
FIXED_KEYS: Tuple[str, ...] = (
    "experiment", "family", "run.seeds", "run.workers", "sweep.key", "sweep.values", "sweep.name",
    "series.key", "series.values", "series.name", "output.dir", "output.statistic", "output.error",
)

CONFIG_PACKAGE: str = "dyna_replay_lab.harness.configs"


def _values(mapping: Mapping[str, Any], key: str) -> Tuple[Any, ...]:
    values = mapping.get(key)
    if values is None:
        return ()
    if not isinstance(values, list) or not values:
        raise ConfigException(f"{key} must be a non-empty list ; got {values!r}")
    if len(set(map(repr, values))) != len(values):
        raise ConfigException(f"{key} holds duplicate values : {values}")
    return tuple(values)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A validated experiment: the flat dotted mapping with defaults filled in
    plus the parsed seed list and sweep and series axes.

    A cell is one (seed, sweep value, series value); each cell's settings are
    the base mapping with the sweep and series keys overridden.
    """

    experiment: str
    family: str
    settings: Dict[str, Any] = field(repr=False)
    seeds: Tuple[int, ...]
    sweep_values: Tuple[Any, ...] = ()
    series_values: Tuple[Any, ...] = ()
    source: str = ""

    # region Construction
    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], source: str = "") -> "ExperimentConfig":
        """
        :raises ConfigException: for unknown keys or values that cannot work
        """
        if not isinstance(mapping, Mapping):
            raise ConfigException(f"{source or 'config'} must be a mapping of dotted keys")
        unknown: List[str] = sorted(set(mapping) - set(DEFAULTS) - {"experiment", "family"})
        if unknown:
            raise ConfigException(f"Unknown config keys in {source or 'config'} : {unknown}")
        for required in ("experiment", "family"):
            if not mapping.get(required):
                raise ConfigException(f"{source or 'config'} has no {required}")

        settings: Dict[str, Any] = dict(DEFAULTS)
        settings.update(mapping)
        seeds = settings["run.seeds"]
        if not isinstance(seeds, list) or not seeds:
            raise ConfigException(f"run.seeds must be a non-empty list ; got {seeds!r}")
        if len(set(seeds)) != len(seeds):
            raise ConfigException(f"run.seeds holds duplicates : {seeds}")

        config = cls(
            experiment=str(settings["experiment"]),
            family=str(settings["family"]),
            settings=settings,
            seeds=tuple(int(s) for s in seeds),
            sweep_values=_values(settings, "sweep.values"),
            series_values=_values(settings, "series.values"),
            source=source,
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as f:
                mapping = yaml.safe_load(f)
        except OSError as e:
            raise ConfigException(f"Cannot read config {path} : {e}")
        except yaml.YAMLError as e:
            raise ConfigException(f"Config {path} is not valid YAML : {e}")
        logging.debug(f"loaded config {path}")
        return cls.from_mapping(mapping or {}, source=str(path))

    @classmethod
    def builtin(cls, name: str) -> "ExperimentConfig":
        if name not in builtin_names():
            raise ConfigException(f"No built-in experiment {name!r} ; known : {builtin_names()}")
        text: str = resources.files(CONFIG_PACKAGE).joinpath(f"{name}.yaml").read_text(encoding="utf-8")
        return cls.from_mapping(yaml.safe_load(text), source=f"builtin:{name}")

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[Union[str, Path]] = None) -> "ExperimentConfig":
        settings: Dict[str, Any] = dict(self.settings)
        seeds: Tuple[int, ...] = self.seeds
        if seed is not None:
            seeds = (int(seed),)
            settings["run.seeds"] = [int(seed)]
        if output_dir is not None:
            settings["output.dir"] = str(output_dir)
        return replace(self, settings=settings, seeds=seeds)
    # endregion

    def validate(self) -> None:
        s = self.settings
        if self.family not in FAMILIES:
            raise ConfigException(f"Unknown family {self.family!r} ; known : {list(FAMILIES)}")
        if s["output.statistic"] not in STATISTICS:
            raise ConfigException(f"output.statistic must be one of {list(STATISTICS)}")
        if s["output.error"] not in ERRORS:
            raise ConfigException(f"output.error must be one of {list(ERRORS)}")
        if int(s["run.workers"]) < 1:
            raise ConfigException(f"run.workers must be positive : {s['run.workers']}")

        for axis in ("sweep", "series"):
            key, values = s[f"{axis}.key"], s[f"{axis}.values"]
            if (key is None) != (values is None):
                raise ConfigException(f"{axis}.key and {axis}.values go together")
            if key is not None and (key in FIXED_KEYS or key not in DEFAULTS):
                raise ConfigException(f"{axis}.key {key!r} cannot be varied")
        if s["sweep.key"] is not None and s["sweep.key"] == s["series.key"]:
            raise ConfigException("sweep.key and series.key must differ")

        if self.family in RL_FAMILIES:
            if int(s["run.episodes"]) < 1:
                raise ConfigException(f"run.episodes must be positive : {s['run.episodes']}")
            if self.family != "planners" and not self.sweep_values:
                raise ConfigException(f"Family {self.family} needs sweep.key and sweep.values")
            for cell in self.cells():
                self.check_components(self.cell_settings(cell[1], cell[2]))

    def check_components(self, settings: Mapping[str, Any]) -> None:
        # late import: the runner imports this module
        from dyna_replay_lab.agents.agent import PlannerKind
        from dyna_replay_lab.envs.grid_world import LAYOUT_DEFAULTS

        layout = settings["env.layout"]
        if layout not in LAYOUT_DEFAULTS and not Path(str(layout)).is_file():
            raise ConfigException(f"Unknown layout {layout!r}")
        if settings["agent.kind"] not in AGENT_KINDS:
            raise ConfigException(f"agent.kind must be one of {list(AGENT_KINDS)} ; got {settings['agent.kind']!r}")
        try:
            planner = PlannerKind(settings["loop.planner"])
        except ValueError:
            raise ConfigException(
                f"Unknown planner {settings['loop.planner']!r} ; known : {[p.value for p in PlannerKind]}"
            )
        if settings["agent.kind"] == "neural" and (
                planner is PlannerKind.BACKWARD_DYNA or int(settings["loop.search_depth"]) > 0):
            raise ConfigException("Neural agents support the none, replay and forward-dyna planners without search")

    # region Cells
    def cells(self) -> List[Tuple[int, Any, Any]]:
        """
        Every (seed, sweep value, series value), series outermost then sweep
        then seed.
        """
        sweep = self.sweep_values or (None,)
        series = self.series_values or (None,)
        return [(seed, x, label) for label in series for x in sweep for seed in self.seeds]

    def cell_settings(self, sweep_value: Any = None, series_value: Any = None) -> Dict[str, Any]:
        settings: Dict[str, Any] = dict(self.settings)
        if sweep_value is not None:
            settings[self.settings["sweep.key"]] = sweep_value
        if series_value is not None:
            settings[self.settings["series.key"]] = series_value
        return settings

    @property
    def sweep_name(self) -> Optional[str]:
        key = self.settings["sweep.key"]
        if key is None:
            return None
        return self.settings["sweep.name"] or key.rsplit(".", 1)[-1]

    @property
    def series_name(self) -> Optional[str]:
        key = self.settings["series.key"]
        if key is None:
            return None
        return self.settings["series.name"] or key.rsplit(".", 1)[-1]

    @property
    def output_dir(self) -> Path:
        return Path(self.settings["output.dir"])
    # endregion


def builtin_names() -> List[str]:
    return sorted(
        entry.name[:-len(".yaml")]
        for entry in resources.files(CONFIG_PACKAGE).iterdir()
        if entry.name.endswith(".yaml")
    )


def load_config(name_or_path: Union[str, Path]) -> ExperimentConfig:
    """
    A built-in experiment by name or a YAML file by path.
    """
    if Path(name_or_path).is_file():
        return ExperimentConfig.from_file(name_or_path)
    return ExperimentConfig.builtin(str(name_or_path))
