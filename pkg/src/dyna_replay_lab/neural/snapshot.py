from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.neural.mlp import Mlp


HEADER_PREFIX: str = "# shapes="


class SnapshotFormatException(GeneralException):
    pass


def save_parameters(net: Mlp, path: Union[str, Path]) -> None:
    """
    Writes the parameters as one flat text vector, preceded by a header line
    listing every array shape, e.g. ``# shapes=25x20,20,20x20,20,20x4,4``.
    """
    shapes: str = ",".join("x".join(str(d) for d in p.shape) for p in net.parameters)
    flat: np.ndarray = np.concatenate([p.ravel() for p in net.parameters])
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{HEADER_PREFIX}{shapes}\n")
        np.savetxt(f, flat, fmt="%.17g")


def load_parameters(path: Union[str, Path]) -> Mlp:
    """
    Reads a snapshot written by ``save_parameters``.

    :raises SnapshotFormatException: on a missing header or a size mismatch
    """
    with open(path, encoding="utf-8") as f:
        header: str = f.readline().strip()
        if not header.startswith(HEADER_PREFIX):
            raise SnapshotFormatException(f"{path} has no shape header")
        try:
            shapes: List[Tuple[int, ...]] = [
                tuple(int(d) for d in item.split("x")) for item in header[len(HEADER_PREFIX):].split(",")
            ]
        except ValueError as e:
            raise SnapshotFormatException(f"Bad shape header in {path} : {e}")
        flat: np.ndarray = np.atleast_1d(np.loadtxt(f, dtype=float))

    sizes: List[int] = [int(np.prod(shape)) for shape in shapes]
    if sum(sizes) != flat.size:
        raise SnapshotFormatException(
            f"{path} holds {flat.size} values ; header describes {sum(sizes)}"
        )
    parameters: List[np.ndarray] = []
    offset: int = 0
    for shape, size in zip(shapes, sizes):
        parameters.append(flat[offset:offset + size].reshape(shape))
        offset += size
    return Mlp(input_size=shapes[0][0], output_size=shapes[-1][0], parameters=parameters)
