"""Random-shooting model-predictive control over a discrete action set.

Used to compare reward variants on continuous envs where tabular learning
does not apply: at every step, ``n_samples`` random action sequences are
simulated on clones of the env and the first action of the best one is
executed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .episode import EpisodeController
from .rewards import StepReward
from .task import TaskSpec
from .trace import Termination, Trace, make_trace


@dataclass
class ShootingConfig:
    n_samples: int = 16
    plan_horizon: int = 10
    gamma: float = 0.99


def _violates(task: TaskSpec, state) -> bool:
    return any(r.signal(state) < 0 for r in task.safety)


def plan_action(env, reward: StepReward, task: TaskSpec, rng, cfg: ShootingConfig) -> int:
    n_actions = len(env.actions)
    seqs = rng.integers(n_actions, size=(cfg.n_samples, cfg.plan_horizon))
    best, best_ret = 0, -np.inf
    for seq in seqs:
        sim = env.clone()
        r_sim = reward.fork()
        ret, disc = 0.0, 1.0
        for k, a in enumerate(seq):
            s = sim.step(int(a))
            absorbing = _violates(task, s)
            ret += disc * r_sim.step(s, absorbing, absorbing or k == len(seq) - 1)
            disc *= cfg.gamma
            if absorbing:
                break
        if ret > best_ret:
            best, best_ret = int(seq[0]), ret
    return best


def mpc_episode(env, reward: StepReward, task: TaskSpec, seed: int,
                cfg: ShootingConfig | None = None) -> Trace:
    cfg = cfg or ShootingConfig()
    rng = np.random.default_rng([seed, 7])
    ctrl = EpisodeController(task, env.horizon)
    state = env.reset(seed)
    reward.start(state)
    states, actions = [state], [{}]
    while ctrl.running:
        a = plan_action(env, reward, task, rng, cfg)
        state = env.step(a)
        why = ctrl.step_verdict(state)
        reward.step(state, why in (Termination.SAFETY_VIOLATION, Termination.GOAL_ACHIEVED),
                    not ctrl.running)
        states.append(state)
        actions.append(env.action_record(a))
    return make_trace(states, task.decls, actions, env.horizon, ctrl.termination)
