import argparse
import logging

from pathlib import Path
from typing import Dict, List, Optional, Tuple

from dyna_replay_lab.__version__ import __version__
from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.harness.aggregate import SUMMARY_COLUMNS, SummaryRow, aggregate
from dyna_replay_lab.harness.config import ExperimentConfig, builtin_names, load_config
from dyna_replay_lab.harness.plot import emit_svg
from dyna_replay_lab.harness.results import ExperimentException, read_csv, write_csv
from dyna_replay_lab.harness.runner import run


LOG_FORMAT: str = "%(asctime)s:%(module)s:%(levelname)s:%(message)s"


def _run(args: argparse.Namespace) -> None:
    config: ExperimentConfig = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)
    outcome = run(config)
    print(outcome.csv_path)


def _summary_from_csv(args: argparse.Namespace) -> Tuple[Dict[str, Optional[str]], List[SummaryRow]]:
    metadata, rows = read_csv(args.input)
    if not metadata.get("x") or not metadata.get("y"):
        raise ExperimentException(f"{args.input} does not name its x and y columns")
    if rows and set(SUMMARY_COLUMNS) <= set(rows[0]):
        # already a summary
        return metadata, [
            SummaryRow(**{c: (row[c] if row[c] != "" else None) for c in SUMMARY_COLUMNS}) for row in rows
        ]
    statistic: str = args.stat or metadata.get("statistic") or "median"
    error: str = args.error or metadata.get("error") or "interquartile"
    summary = aggregate(rows, metadata["x"], metadata["y"], metadata.get("series"), statistic, error)
    metadata.update(statistic=statistic, error=error)
    return metadata, summary


def _aggregate(args: argparse.Namespace) -> None:
    metadata, summary = _summary_from_csv(args)
    out: Path = Path(args.out) if args.out else Path(args.input).with_suffix(".summary.csv")
    write_csv(out, metadata, SUMMARY_COLUMNS, [row.as_dict() for row in summary])
    print(out)


def _plot(args: argparse.Namespace) -> None:
    metadata, summary = _summary_from_csv(args)
    path = emit_svg(
        summary, args.out,
        x_label=metadata["x"], y_label=metadata["y"],
        logx=args.logx, logy=args.logy, title=metadata.get("experiment") or "",
    )
    print(path)


def _list(args: argparse.Namespace) -> None:
    for name in builtin_names():
        config = ExperimentConfig.builtin(name)
        print(f"{name}\t{config.family}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyna-replay-lab",
        description="Replay, Dyna and linear TD stability experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run an experiment and write its CSV and SVG")
    run_parser.add_argument("--config", required=True, help="YAML file or built-in experiment name")
    run_parser.add_argument("--seed", type=int, help="run this seed only")
    run_parser.add_argument("--out", help="output directory")
    run_parser.set_defaults(handler=_run)

    aggregate_parser = commands.add_parser("aggregate", help="summarise a result CSV across seeds")
    aggregate_parser.add_argument("--in", dest="input", required=True)
    aggregate_parser.add_argument("--stat", choices=("median", "mean"))
    aggregate_parser.add_argument("--error", choices=("interquartile", "standard-error"))
    aggregate_parser.add_argument("--out")
    aggregate_parser.set_defaults(handler=_aggregate)

    plot_parser = commands.add_parser("plot", help="draw a result or summary CSV as SVG")
    plot_parser.add_argument("--in", dest="input", required=True)
    plot_parser.add_argument("--out", required=True)
    plot_parser.add_argument("--stat", choices=("median", "mean"))
    plot_parser.add_argument("--error", choices=("interquartile", "standard-error"))
    plot_parser.add_argument("--logx", action="store_true")
    plot_parser.add_argument("--logy", action="store_true")
    plot_parser.set_defaults(handler=_plot)

    list_parser = commands.add_parser("list-experiments", help="list the built-in experiments")
    list_parser.set_defaults(handler=_list)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        args.handler(args)
    except GeneralException as e:
        logging.error(e)
        return 1
    return 0
