from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Optional

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition
from dyna_replay_lab.replay.buffer import ReplayBuffer


class ComponentMismatchException(GeneralException):
    """
    Raised when the environment, model, agent and planner of a loop cannot
    work together, e.g. a backward planner given a forward model.
    """
    pass


class PlannerKind(Enum):
    NONE = "none"
    REPLAY = "replay"
    FORWARD_DYNA = "forward-dyna"
    BACKWARD_DYNA = "backward-dyna"


class Agent(ABC):
    """
    What ``run_dyna_loop`` needs from an agent: behave, learn from a real
    transition and apply one planning update.
    """

    @abstractmethod
    def act(self, state: Any, rng: np.random.Generator, model: Any = None, search_depth: int = 0) -> int:
        pass

    @abstractmethod
    def learn(self, t: Transition) -> None:
        pass

    @abstractmethod
    def plan(self, planner: PlannerKind, replay: ReplayBuffer, model: Any, rng: np.random.Generator) -> None:
        pass

    @abstractmethod
    def check_components(self, env: Any, model: Any, planner: PlannerKind, search_depth: int) -> None:
        """
        :raises ComponentMismatchException:
        """
        pass


def require(condition: bool, message: str, model: Optional[Any] = None) -> None:
    if not condition:
        raise ComponentMismatchException(message if model is None else f"{message} ; got {model!r}")
