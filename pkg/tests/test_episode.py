import numpy as np
import pytest

from hprs.envs import make_env
from hprs.episode import EpisodeController, rollout
from hprs.errors import AlreadyTerminated
from hprs.task import task_from_text
from hprs.trace import Termination, sigma, sigma_task

SPEC = 'var s in [-1, 1]\nvar g in [-1, 1]\nensure "safe": s >= 0\n{kw} "goal": g >= 0\n'


def ctrl(kw="achieve", horizon=10):
    return EpisodeController(task_from_text(SPEC.format(kw=kw)), horizon)


def test_safety_violation():
    c = ctrl()
    assert c.step_verdict({"s": -0.1, "g": 1.0}) is Termination.SAFETY_VIOLATION
    with pytest.raises(AlreadyTerminated):
        c.step_verdict({"s": 1, "g": 1})
    assert c.termination is Termination.SAFETY_VIOLATION


def test_achieve_stops_at_first_goal():
    c = ctrl()
    assert c.step_verdict({"s": 1, "g": -1}) is Termination.RUNNING
    assert c.step_verdict({"s": 1, "g": -1}) is Termination.RUNNING
    assert c.step_verdict({"s": 1, "g": 0.05}) is Termination.GOAL_ACHIEVED
    assert c.steps == 3


def test_conquer_runs_to_timeout():
    c = ctrl("conquer", horizon=5)
    verdicts = [c.step_verdict({"s": 1, "g": 1}) for _ in range(5)]
    assert verdicts[:4] == [Termination.RUNNING] * 4
    assert verdicts[4] is Termination.TIMEOUT


def test_timeout_and_reset():
    c = ctrl(horizon=2)
    c.step_verdict({"s": 1, "g": -1})
    assert c.step_verdict({"s": 1, "g": -1}) is Termination.TIMEOUT
    c.reset()
    assert c.running and c.steps == 0
    with pytest.raises(ValueError):
        EpisodeController(c.task, 0)


def test_rollout_traces_are_consistent(grid_task):
    env = make_env("grid")
    rng = np.random.default_rng(0)
    for seed in range(100):
        tr = rollout(env, lambda s: int(rng.integers(5)), grid_task, env.horizon, seed)
        assert len(tr) <= env.horizon + 1
        if tr.termination is Termination.GOAL_ACHIEVED:
            assert sigma(grid_task.target, tr)
        if tr.termination is Termination.SAFETY_VIOLATION:
            assert not sigma_task(grid_task, tr)
