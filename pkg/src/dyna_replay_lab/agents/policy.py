import numpy as np


def act(values: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """
    Epsilon-greedy choice over action values (one-step Q values or planned
    values). Ties between maximal actions are broken uniformly at random.

    One uniform draw is always consumed first, so the stream advances the
    same way whatever epsilon is.

    :param values: one value per action
    :type values: np.ndarray
    :param epsilon: exploration rate in [0, 1]
    :type epsilon: float
    :param rng: random stream
    :type rng: np.random.Generator
    :return: action index
    :rtype: int
    """
    values = np.asarray(values, dtype=float)
    if rng.random() < epsilon:
        return int(rng.integers(len(values)))
    best: np.ndarray = np.flatnonzero(values == values.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])
