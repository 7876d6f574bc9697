"""Episode lifecycle: when does an episode end, and why."""

from __future__ import annotations

from typing import Mapping

from .errors import AlreadyTerminated
from .spec_lang import ReqClass
from .task import TaskSpec
from .trace import Termination, Trace, make_trace


class EpisodeController:
    """Decides termination after every transition.

    Safety violations end the episode first (a simultaneous target hit still
    counts as a violation). ``achieve`` targets end the episode at the first
    satisfying state; ``conquer`` targets only end by timeout, and their
    satisfaction is read off the finished trace.
    """

    def __init__(self, task: TaskSpec, horizon: int):
        if horizon < 1:
            raise ValueError("horizon must be a positive integer")
        self.task = task
        self.horizon = int(horizon)
        self.steps = 0
        self.termination = Termination.RUNNING

    @property
    def running(self) -> bool:
        return self.termination is Termination.RUNNING

    def reset(self) -> None:
        self.steps = 0
        self.termination = Termination.RUNNING

    def step_verdict(self, state_next: Mapping) -> Termination:
        if not self.running:
            raise AlreadyTerminated(f"episode already ended ({self.termination.value})")
        self.steps += 1
        if any(r.signal(state_next) < 0 for r in self.task.safety):
            self.termination = Termination.SAFETY_VIOLATION
        elif (self.task.target.cls is ReqClass.TARGET_ACHIEVE
              and self.task.target.signal(state_next) >= 0):
            self.termination = Termination.GOAL_ACHIEVED
        elif self.steps >= self.horizon:
            self.termination = Termination.TIMEOUT
        return self.termination


def rollout(env, policy, task: TaskSpec, horizon: int, seed: int) -> Trace:
    """Run ``policy(state) -> action`` from ``env.reset(seed)`` until the controller stops."""
    ctrl = EpisodeController(task, horizon)
    state = env.reset(seed)
    states, actions = [state], [{}]
    while ctrl.running:
        action = policy(state)
        state = env.step(action)
        states.append(state)
        actions.append(env.action_record(action))
        ctrl.step_verdict(state)
    return make_trace(states, task.decls, actions, horizon, ctrl.termination)
