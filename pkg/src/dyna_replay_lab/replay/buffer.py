import csv
import logging

from collections import deque
from pathlib import Path
from typing import Deque, Iterator, List, Optional, Union

import numpy as np

from dyna_replay_lab.core.exceptions import GeneralException
from dyna_replay_lab.core.transition import Transition


class EmptyBufferException(GeneralException):
    pass


class ReplayFormatException(GeneralException):
    """
    Raised when a transition dump cannot be read back.
    """
    pass


class ReplayBuffer:
    """
    Bounded FIFO store of transitions.

    In per-transition mode the oldest transition is evicted once the buffer
    is over capacity. In episodic mode the oldest whole episode is evicted
    instead, so the buffer only ever loses full episodes. Episodes end on a
    terminal transition (discount 0) or on an explicit ``end_episode()``.

    Single writer; read-only sampling may be shared between writes.
    """

    def __init__(self, capacity: Optional[int] = None, episodic: bool = False):
        """
        :param capacity: maximum number of stored transitions; None is unbounded
        :type capacity: Optional[int]
        :param episodic: evict whole episodes instead of single transitions
        :type episodic: bool
        """
        super().__init__()
        if capacity is not None and capacity < 1:
            raise GeneralException(f"Replay capacity must be positive : {capacity}")
        self.capacity: Optional[int] = capacity
        self.episodic: bool = episodic

        self._storage: Deque[Transition] = deque()
        # lengths of the stored episodes, oldest first; the last may still be open
        self._episode_lengths: Deque[int] = deque()
        self._episode_open: bool = False

    def __len__(self) -> int:
        return len(self._storage)

    def __iter__(self) -> Iterator[Transition]:
        return iter(self._storage)

    def __getitem__(self, index: int) -> Transition:
        return self._storage[index]

    @property
    def transitions(self) -> List[Transition]:
        return list(self._storage)

    @property
    def episode_boundaries(self) -> List[int]:
        """
        Exclusive end index of every closed episode in storage.
        """
        boundaries: List[int] = []
        end: int = 0
        closed = len(self._episode_lengths) - (1 if self._episode_open else 0)
        for i, length in enumerate(self._episode_lengths):
            end += length
            if i < closed:
                boundaries.append(end)
        return boundaries

    def append(self, transition: Transition) -> "ReplayBuffer":
        """
        Stores a transition and evicts per the buffer's mode when over capacity.

        :param transition:
        :type transition: Transition
        :return: the buffer itself
        :rtype: ReplayBuffer
        """
        if not self._episode_open:
            self._episode_lengths.append(0)
            self._episode_open = True
        self._storage.append(transition)
        self._episode_lengths[-1] += 1
        if transition.is_terminal:
            self._episode_open = False

        if self.capacity is not None:
            while len(self._storage) > self.capacity:
                if self.episodic and (len(self._episode_lengths) > 1 or not self._episode_open):
                    self._evict_episode()
                else:
                    self._evict_transition()
        return self

    def end_episode(self) -> None:
        """
        Closes the open episode, e.g. after a step limit truncated it.
        """
        self._episode_open = False

    def _evict_transition(self) -> None:
        self._storage.popleft()
        self._episode_lengths[0] -= 1
        if self._episode_lengths[0] == 0:
            self._episode_lengths.popleft()
            if not self._episode_lengths:
                self._episode_open = False

    def _evict_episode(self) -> None:
        length: int = self._episode_lengths.popleft()
        for _ in range(length):
            self._storage.popleft()
        if not self._episode_lengths:
            self._episode_open = False
        logging.debug(f"evicted an episode of {length} transitions ; {len(self._storage)} remain")

    def sample_indices(self, rng: np.random.Generator, batch_size: int) -> np.ndarray:
        if not self._storage:
            raise EmptyBufferException("Cannot sample from an empty replay buffer")
        return rng.integers(0, len(self._storage), size=batch_size)

    def sample_uniform(self, rng: np.random.Generator, batch_size: int = 1) -> List[Transition]:
        """
        Draws ``batch_size`` stored transitions uniformly, with replacement.

        :param rng: random stream
        :type rng: np.random.Generator
        :param batch_size:
        :type batch_size: int
        :raises EmptyBufferException: when nothing is stored
        :return:
        :rtype: List[Transition]
        """
        return [self._storage[i] for i in self.sample_indices(rng, batch_size)]

    # region CSV dump
    def dump_csv(self, path: Union[str, Path]) -> None:
        """
        Writes one line per transition: s, a, r, gamma, s'. Integer states only.
        """
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            for t in self._storage:
                writer.writerow([t.state, t.action, repr(float(t.reward)), repr(float(t.discount)), t.next_state])

    @classmethod
    def load_csv(
            cls,
            path: Union[str, Path],
            capacity: Optional[int] = None,
            episodic: bool = False,
    ) -> "ReplayBuffer":
        buffer = cls(capacity=capacity, episodic=episodic)
        try:
            with open(path, newline="", encoding="utf-8") as f:
                for line_number, row in enumerate(csv.reader(f), start=1):
                    if not row:
                        continue
                    if len(row) != 5:
                        raise ReplayFormatException(
                            f"line {line_number} has {len(row)} fields ; expected 5"
                        )
                    state, action, reward, discount, next_state = row
                    buffer.append(
                        Transition(int(state), int(action), float(reward), float(discount), int(next_state))
                    )
        except ValueError as e:
            raise ReplayFormatException(f"Could not parse {path} : {e}")
        return buffer
    # endregion
