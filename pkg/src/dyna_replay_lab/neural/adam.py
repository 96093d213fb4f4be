from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from dyna_replay_lab.core.exceptions import ShapeMismatchException


@dataclass
class AdamState:
    """
    Bias-corrected Adam accumulators for one parameter list.

    :param learning_rate:
    :type learning_rate: float
    :param beta1: first-moment decay
    :type beta1: float
    :param beta2: second-moment decay
    :type beta2: float
    :param epsilon: added to the root of the second moment
    :type epsilon: float
    """

    first_moments: List[np.ndarray]
    second_moments: List[np.ndarray]
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = field(default=0)

    @classmethod
    def for_parameters(cls, parameters: List[np.ndarray], learning_rate: float = 1e-3) -> "AdamState":
        return cls(
            first_moments=[np.zeros_like(p) for p in parameters],
            second_moments=[np.zeros_like(p) for p in parameters],
            learning_rate=learning_rate,
        )


def adam_step(
        state: AdamState,
        parameters: List[np.ndarray],
        grads: List[np.ndarray],
) -> Tuple[List[np.ndarray], AdamState]:
    """
    One Adam update, applied to ``parameters`` in place:
    m <- b1 m + (1 - b1) g ; v <- b2 v + (1 - b2) g^2 ;
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).

    :param state:
    :type state: AdamState
    :param parameters:
    :type parameters: List[np.ndarray]
    :param grads: gradients in parameter order
    :type grads: List[np.ndarray]
    :raises ShapeMismatchException:
    :return: (parameters, state)
    :rtype: Tuple[List[np.ndarray], AdamState]
    """
    if len(grads) != len(parameters) or len(state.first_moments) != len(parameters):
        raise ShapeMismatchException(
            f"Got {len(grads)} gradients and {len(state.first_moments)} moments "
            f"for {len(parameters)} parameters"
        )
    state.step += 1
    correction1: float = 1.0 - state.beta1 ** state.step
    correction2: float = 1.0 - state.beta2 ** state.step
    for theta, g, m, v in zip(parameters, grads, state.first_moments, state.second_moments):
        if g.shape != theta.shape:
            raise ShapeMismatchException(f"Gradient shape {g.shape} does not match {theta.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        theta -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    return parameters, state
