from dyna_replay_lab.harness.aggregate import SummaryRow, aggregate
from dyna_replay_lab.harness.config import ConfigException, ExperimentConfig, builtin_names, load_config
from dyna_replay_lab.harness.plot import PlotException, emit_heatmap_svg, emit_svg
from dyna_replay_lab.harness.results import ExperimentException, RunRecord, read_csv, write_csv
from dyna_replay_lab.harness.runner import RunOutcome, run, run_cell, run_records
