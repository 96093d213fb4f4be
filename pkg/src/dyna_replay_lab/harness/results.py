import csv
import logging
import os
import tempfile

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from dyna_replay_lab.core.exceptions import GeneralException


METADATA_PREFIX: str = "# "
METADATA_KEYS: Tuple[str, ...] = ("experiment", "x", "y", "series", "statistic", "error")


class ExperimentException(GeneralException):
    pass


@dataclass
class RunRecord:
    """
    One cell of a learning experiment.

    :param total_steps: environment steps taken until the run stopped
    """

    experiment: str
    seed: int
    sweep_value: Any
    series: Any
    episode_lengths: List[int] = field(default_factory=list)
    episode_returns: List[float] = field(default_factory=list)
    total_steps: int = 0

    @property
    def episodes(self) -> int:
        return len(self.episode_lengths)


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.9g}"
    return "" if value is None else str(value)


def parse_value(text: str) -> Any:
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def write_csv(
        path: Union[str, Path],
        metadata: Mapping[str, Any],
        columns: Sequence[str],
        rows: Sequence[Mapping[str, Any]],
) -> Path:
    """
    Writes a metadata comment line, a header and one line per row. The file is
    written next to its destination first and moved into place, so a reader
    never sees a partial file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    line: str = " ".join(f"{key}={format_value(metadata.get(key))}" for key in METADATA_KEYS)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", newline="", encoding="utf-8") as f:
            f.write(f"{METADATA_PREFIX}{line}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_value(row[c]) for c in columns])
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    logging.info(f"wrote {len(rows)} rows to {path}")
    return path


def read_csv(path: Union[str, Path]) -> Tuple[Dict[str, Optional[str]], List[Dict[str, Any]]]:
    """
    :raises ExperimentException: when the file lacks the metadata line
    :return: (metadata, rows with numbers parsed)
    """
    try:
        with open(path, newline="", encoding="utf-8") as f:
            first: str = f.readline()
            if not first.startswith(METADATA_PREFIX):
                raise ExperimentException(f"{path} has no metadata line")
            metadata: Dict[str, Optional[str]] = {}
            for token in first[len(METADATA_PREFIX):].split():
                key, _, value = token.partition("=")
                metadata[key] = value or None
            rows = [{k: parse_value(v) for k, v in row.items()} for row in csv.DictReader(f)]
    except OSError as e:
        raise ExperimentException(f"Cannot read {path} : {e}")
    return metadata, rows
