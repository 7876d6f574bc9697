"""Step-wise reward signals for online learners.

Every variant follows the same protocol: ``start(state)`` at reset, then
``step(state_next, absorbing, done)`` after each transition. States are
clamped to the task's declared boxes, as when monitoring a trace.
"""

from __future__ import annotations

import copy
from collections import deque
from typing import Mapping

import numpy as np

from .shaping import TERMINAL_CONVENTIONS, morl_weights, potential_from_scores, score_matrix
from .task import TaskSpec
from .trace import clamp_state, make_trace, task_robustness

VARIANTS = ("hprs", "sparse", "morl-unif", "morl-decr", "tltl", "bhnr")


class StepReward:
    name = "base"

    def __init__(self, task: TaskSpec):
        self.task = task
        self._cache: dict[tuple, tuple[np.ndarray, float]] = {}

    def _key(self, state: Mapping) -> tuple:
        return tuple(float(state[v]) for v in self.task.variables if v in state)

    def _eval(self, state: Mapping) -> tuple[np.ndarray, float]:
        """(scores, potential) of a state, memoized since tabular envs revisit states."""
        key = self._key(state)
        hit = self._cache.get(key)
        if hit is None:
            s, _ = clamp_state(state, self.task.decls)
            scores = score_matrix(self.task, s)
            hit = (scores[0], float(potential_from_scores(self.task, scores)[0]))
            self._cache[key] = hit
        return hit

    def _clamped(self, state: Mapping) -> dict:
        return clamp_state(state, self.task.decls)[0]

    def start(self, state: Mapping) -> None:
        pass

    def fork(self) -> "StepReward":
        """Independent copy of the episode state; the memo cache stays shared."""
        other = copy.copy(self)
        for k, v in vars(self).items():
            if isinstance(v, (list, deque)) and k != "_cache":
                setattr(other, k, copy.copy(v))
        return other

    def step(self, state_next: Mapping, absorbing: bool, done: bool) -> float:
        raise NotImplementedError


class SparseReward(StepReward):
    name = "sparse"

    def step(self, state_next, absorbing, done):
        return float(self.task.target.signal(self._clamped(state_next)) >= 0)


class HPRSReward(SparseReward):
    name = "hprs"

    def __init__(self, task, gamma=0.99, terminal_potential="zero"):
        super().__init__(task)
        if terminal_potential not in TERMINAL_CONVENTIONS:
            raise ValueError(f"terminal_potential must be one of {TERMINAL_CONVENTIONS}")
        self.gamma = gamma
        self.terminal_potential = terminal_potential
        self._prev = 0.0

    def start(self, state):
        self._prev = self._eval(state)[1]

    def step(self, state_next, absorbing, done):
        psi = self._eval(state_next)[1]
        after = 0.0 if absorbing and self.terminal_potential == "zero" else psi
        r = super().step(state_next, absorbing, done) + self.gamma * after - self._prev
        self._prev = psi
        return r


class MORLReward(StepReward):
    def __init__(self, task, weights="uniform"):
        super().__init__(task)
        self.w = morl_weights(task, weights)
        self.name = "morl-unif" if weights == "uniform" else "morl-decr"

    def step(self, state_next, absorbing, done):
        return float(self._eval(state_next)[0] @ self.w)


class TLTLReward(StepReward):
    """Zero until the episode ends, then the robustness of the whole episode."""

    name = "tltl"

    def __init__(self, task, combine="min"):
        super().__init__(task)
        self.combine = combine
        self._states: list = []

    def start(self, state):
        self._states = [state]

    def step(self, state_next, absorbing, done):
        self._states.append(state_next)
        if not done:
            return 0.0
        return task_robustness(self.task, make_trace(self._states, self.task.decls), self.combine)


class BHNRReward(StepReward):
    """Robustness of the task over the last ``window`` states, every step."""

    name = "bhnr"

    def __init__(self, task, window=10, combine="min"):
        super().__init__(task)
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self.combine = combine
        self._buf: deque = deque(maxlen=window)

    def start(self, state):
        self._buf = deque([state], maxlen=self.window)

    def step(self, state_next, absorbing, done):
        self._buf.append(state_next)
        return task_robustness(self.task, make_trace(list(self._buf), self.task.decls), self.combine)


def make_reward(variant: str, task: TaskSpec, *, gamma: float = 0.99,
                terminal_potential: str = "zero", window: int = 10, combine: str = "min") -> StepReward:
    if variant == "hprs":
        return HPRSReward(task, gamma, terminal_potential)
    if variant == "sparse":
        return SparseReward(task)
    if variant == "morl-unif":
        return MORLReward(task, "uniform")
    if variant == "morl-decr":
        return MORLReward(task, "decreasing")
    if variant == "tltl":
        return TLTLReward(task, combine)
    if variant == "bhnr":
        return BHNRReward(task, window, combine)
    raise ValueError(f"unknown reward variant {variant!r}; choose from {VARIANTS}")
