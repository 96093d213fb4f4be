import logging

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Hashable, Mapping, Optional, Tuple, Union

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException, ShapeMismatchException
from dyna_replay_lab.envs.mrp import MrpSpec, mrp_matrices
from dyna_replay_lab.replay.empirical import EmpiricalModel


EIGEN_TOLERANCE: float = 1e-10
BLOW_UP_THRESHOLD: float = 1e6
ITERATION_CAP: int = 100_000


class InvalidParameterException(GeneralException):
    pass


@dataclass(frozen=True)
class LinearMrp:
    """
    Markov reward process seen through linear features.

    :param features: X, one row per state
    :param transition: P with [P]_ij = p(next = i | current = j); columns sum
        to 1, or to less where episodes terminate
    :param sampling: diagonal of D, non-negative and summing to 1
    :param discount: gamma
    :param rewards: expected reward per state
    """

    features: np.ndarray
    transition: np.ndarray
    sampling: np.ndarray
    discount: float
    rewards: np.ndarray

    def __post_init__(self) -> None:
        for name in ("features", "transition", "sampling", "rewards"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n: int = self.features.shape[0]
        if self.features.ndim != 2:
            raise ShapeMismatchException(f"features must be 2-D ; got shape {self.features.shape}")
        if self.transition.shape != (n, n):
            raise ShapeMismatchException(f"transition must be {n}x{n} ; got shape {self.transition.shape}")
        if self.sampling.shape != (n,) or self.rewards.shape != (n,):
            raise ShapeMismatchException(
                f"sampling and rewards must have length {n} ; got {self.sampling.shape}, {self.rewards.shape}"
            )
        column_sums: np.ndarray = self.transition.sum(axis=0)
        if np.any(self.transition < 0.0) or np.any(column_sums > 1.0 + 1e-9):
            raise InvalidParameterException(f"transition columns must be sub-stochastic : {column_sums}")
        if np.any(self.sampling < 0.0) or not np.isclose(self.sampling.sum(), 1.0):
            raise InvalidParameterException(f"sampling must be a distribution : {self.sampling}")
        if not 0.0 <= self.discount <= 1.0:
            raise InvalidParameterException(f"discount must lie in [0, 1] : {self.discount}")

    @property
    def sampling_matrix(self) -> np.ndarray:
        return np.diag(self.sampling)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


def key_matrix(m: LinearMrp) -> Tuple[np.ndarray, np.ndarray]:
    """
    A = X^T D (I - gamma P^T) X and b = X^T D r, the expected TD(0) update
    being w <- w + alpha (b - A w).

    :return: (A, b)
    :rtype: Tuple[np.ndarray, np.ndarray]
    """
    x, d = m.features, m.sampling_matrix
    identity: np.ndarray = np.eye(len(m.sampling))
    a: np.ndarray = x.T @ d @ (identity - m.discount * m.transition.T) @ x
    b: np.ndarray = x.T @ d @ m.rewards
    return a, b


class Verdict(Enum):
    STABLE = "stable"
    MARGINAL = "marginal"
    DIVERGENT = "divergent"


@dataclass(frozen=True)
class StabilityReport:
    key: np.ndarray
    step_size: float
    min_symmetric_eigenvalue: float
    spectral_radius: float
    verdict: Verdict

    @property
    def stable(self) -> bool:
        return self.verdict is not Verdict.DIVERGENT


def _as_square(a: Union[np.ndarray, float]) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatchException(f"Key matrix must be square ; got shape {a.shape}")
    return a


def stability_verdict(a: Union[np.ndarray, float], step_size: float, tolerance: float = EIGEN_TOLERANCE) -> StabilityReport:
    """
    Divergent when the symmetric part of A has an eigenvalue below
    -tolerance or when rho(I - alpha A) exceeds 1 + tolerance. Otherwise
    marginal when A is singular within tolerance, else stable.

    :param a: key matrix, or a scalar for one feature
    :param step_size: alpha > 0
    :raises InvalidParameterException: for a non-positive step size
    :raises ShapeMismatchException: for a non-square matrix
    """
    if step_size <= 0.0:
        raise InvalidParameterException(f"step_size must be positive : {step_size}")
    a = _as_square(a)
    min_symmetric: float = float(np.linalg.eigvalsh(0.5 * (a + a.T)).min())
    spectral_radius: float = float(np.abs(np.linalg.eigvals(np.eye(len(a)) - step_size * a)).max())

    if min_symmetric < -tolerance or spectral_radius > 1.0 + tolerance:
        verdict = Verdict.DIVERGENT
    elif np.abs(np.linalg.eigvals(a)).min() <= tolerance:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.STABLE
    return StabilityReport(
        key=a,
        step_size=step_size,
        min_symmetric_eigenvalue=min_symmetric,
        spectral_radius=spectral_radius,
        verdict=verdict,
    )


@dataclass
class TdIteration:
    """
    Outcome of iterating the expected TD update.

    :param weights: final weights (shape of w0)
    :param diverged: per-system flag
    :param trajectory: every iterate including w0, when recorded
    """

    weights: np.ndarray
    diverged: Union[bool, np.ndarray]
    trajectory: Optional[np.ndarray] = None


def iterate_expected_td(
        a: np.ndarray,
        b: np.ndarray,
        w0: np.ndarray,
        step_size: float,
        steps: int = ITERATION_CAP,
        blow_up_threshold: float = BLOW_UP_THRESHOLD,
        record_trajectory: bool = True,
) -> TdIteration:
    """
    Iterates w <- (I - alpha A) w + alpha b.

    A run diverges when ||w|| exceeds ``blow_up_threshold`` or when its distance
    to the fixed point pinv(A) b is larger after ``steps`` iterations than at
    the start; slow growth below the threshold is divergence too. A diverged
    run stops updating.

    Systems can be stacked: A of shape (n, k, k), b and w0 of shape (n, k).
    Trajectories are only kept for a single system.

    :raises InvalidParameterException: for a non-positive step size
    :raises ShapeMismatchException:
    """
    if step_size <= 0.0:
        raise InvalidParameterException(f"step_size must be positive : {step_size}")
    a = np.asarray(a, dtype=float)
    single: bool = a.ndim < 3
    if single:
        a = _as_square(a)[None]
    b = np.asarray(b, dtype=float).reshape(a.shape[0], a.shape[1])
    w: np.ndarray = np.array(w0, dtype=float).reshape(a.shape[0], a.shape[1])
    if a.shape[1] != a.shape[2]:
        raise ShapeMismatchException(f"Key matrices must be square ; got shape {a.shape}")
    if not single:
        record_trajectory = False

    fixed_point: np.ndarray = np.einsum("nij,nj->ni", np.linalg.pinv(a), b)
    start_distance: np.ndarray = np.linalg.norm(w - fixed_point, axis=1)
    diverged: np.ndarray = np.zeros(a.shape[0], dtype=bool)
    trajectory = [w[0].copy()] if record_trajectory else None

    for _ in range(steps):
        active: np.ndarray = ~diverged
        w[active] += step_size * (b[active] - np.einsum("nij,nj->ni", a[active], w[active]))
        diverged |= np.linalg.norm(w, axis=1) > blow_up_threshold
        if trajectory is not None:
            trajectory.append(w[0].copy())
        if diverged.all():
            break

    end_distance: np.ndarray = np.linalg.norm(w - fixed_point, axis=1)
    diverged |= end_distance - start_distance > 1e-9 * np.maximum(start_distance, 1.0)
    logging.debug(f"expected TD : {int(diverged.sum())} of {len(diverged)} systems diverged")
    return TdIteration(
        weights=w[0] if single else w,
        diverged=bool(diverged[0]) if single else diverged,
        trajectory=np.array(trajectory) if trajectory is not None else None,
    )


def two_state_mrp(d1: float, transition_probability: float, discount: float = 0.99) -> LinearMrp:
    """
    The two-state MRP with x(s) = s, zero rewards and sampling (d1, 1 - d1).
    """
    if not 0.0 <= d1 <= 1.0:
        raise InvalidParameterException(f"d1 must lie in [0, 1] : {d1}")
    transition, features = mrp_matrices(MrpSpec(transition_probability, discount))
    return LinearMrp(
        features=features,
        transition=transition,
        sampling=np.array([d1, 1.0 - d1]),
        discount=discount,
        rewards=np.zeros(2),
    )


def closed_form_key(d1: float, transition_probability: float, discount: float = 0.99) -> float:
    """
    Scalar A of ``two_state_mrp``: d1 (1 - g) + 2 (1 - d1) (2 - g) with
    g = gamma (2 - p).
    """
    g: float = discount * (2.0 - transition_probability)
    return d1 * (1.0 - g) + 2.0 * (1.0 - d1) * (2.0 - g)


def linear_mrp_from_empirical(
        model: EmpiricalModel,
        features: Union[Mapping[Hashable, np.ndarray], Callable[[Hashable], np.ndarray]],
        dynamics: Optional[np.ndarray] = None,
        continuation: bool = True,
) -> LinearMrp:
    """
    The LinearMrp a replay buffer defines.

    :param model: empirical model of the buffer
    :param features: feature vector per state
    :param dynamics: P to use instead of the empirical one (a perfect model),
        indexed like ``model.states``
    :param continuation: weight transitions by gamma_t / gamma so terminal
        transitions do not bootstrap; False uses raw transition frequencies
    """
    lookup = features if callable(features) else features.__getitem__
    x: np.ndarray = np.array([np.atleast_1d(lookup(s)) for s in model.states], dtype=float)
    if dynamics is None:
        dynamics = model.continuation_dynamics if continuation else model.empirical_dynamics
    return LinearMrp(
        features=x,
        transition=dynamics,
        sampling=model.sampling_distribution,
        discount=model.discount,
        rewards=model.expected_rewards,
    )
