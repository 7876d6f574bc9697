"""Exact value iteration on a FiniteMDP and tabular Q-learning on a discrete env."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assessment import AssessmentReport, pam
from .envs.base import FiniteMDP
from .episode import EpisodeController, rollout
from .errors import NonDiscreteEnvironment
from .rewards import StepReward, make_reward
from .shaping import TERMINAL_CONVENTIONS, potential_from_scores, score_matrix
from .task import TaskSpec
from .trace import Termination, clamp_state

TIE_TOL = 1e-8


@dataclass
class TabularPolicy:
    q: np.ndarray
    greedy: list
    residuals: list = field(default_factory=list)

    @property
    def v(self) -> np.ndarray:
        return self.q.max(axis=1)

    def act(self, s: int) -> int:
        """Lowest-index greedy action; deterministic."""
        return min(self.greedy[s])

    def __call__(self, s: int) -> int:
        return self.act(s)


def argmax_sets(q: np.ndarray, tie_tol: float = TIE_TOL) -> list[frozenset]:
    best = q.max(axis=1, keepdims=True)
    return [frozenset(np.flatnonzero(row).tolist()) for row in q >= best - tie_tol]


# ---------------------------------------------------------------------------
# reward tensors over an explicit MDP


def mdp_scores(task: TaskSpec, mdp: FiniteMDP) -> np.ndarray:
    states = [clamp_state(f, task.decls)[0] for f in mdp.features]
    cols = {v: np.array([s[v] for s in states], dtype=float) for v in task.variables}
    return score_matrix(task, cols)


def mdp_potential(task: TaskSpec, mdp: FiniteMDP, terminal_potential: str = "zero") -> np.ndarray:
    """Potential per state; zero on absorbing states under the ``zero`` convention."""
    if terminal_potential not in TERMINAL_CONVENTIONS:
        raise ValueError(f"terminal_potential must be one of {TERMINAL_CONVENTIONS}")
    psi = potential_from_scores(task, mdp_scores(task, mdp))
    if terminal_potential == "zero":
        psi = np.where(mdp.terminal, 0.0, psi)
    return psi


def base_reward_tensor(task: TaskSpec, mdp: FiniteMDP) -> np.ndarray:
    n, m = mdp.n_states, mdp.n_actions
    hit = np.array([task.target.signal(clamp_state(f, task.decls)[0]) >= 0 for f in mdp.features],
                   dtype=float)
    return np.broadcast_to(hit[None, None, :], (n, m, n)).copy()


def shaped_reward_tensor(task: TaskSpec, mdp: FiniteMDP, gamma: float,
                         terminal_potential: str = "zero") -> np.ndarray:
    psi = mdp_potential(task, mdp, terminal_potential)
    return base_reward_tensor(task, mdp) + gamma * psi[None, None, :] - psi[:, None, None]


def reward_tensor(mdp: FiniteMDP, rewardfn) -> np.ndarray:
    """Accept an ``(n, m, n)`` array or ``rewardfn(s, a, s_next)`` over state indices."""
    n, m = mdp.n_states, mdp.n_actions
    if callable(rewardfn):
        R = np.empty((n, m, n))
        for s in range(n):
            for a in range(m):
                for s2 in np.flatnonzero(mdp.P[s, a]):
                    R[s, a, s2] = rewardfn(s, a, s2)
        return np.where(mdp.P > 0, R, 0.0)
    R = np.asarray(rewardfn, dtype=float)
    if R.shape != (n, m, n):
        raise ValueError(f"reward tensor must have shape {(n, m, n)}, got {R.shape}")
    return R


# ---------------------------------------------------------------------------
# value iteration


def _bellman(mdp, rbar, gamma, V):
    live = np.where(mdp.terminal, 0.0, V)
    Q = rbar + gamma * (mdp.P @ live)
    Q[mdp.terminal] = 0.0
    return Q


def _evaluate(mdp, rbar, gamma, pi):
    """Exact value of a deterministic policy by a linear solve over live states."""
    n = mdp.n_states
    live = ~mdp.terminal
    Ppi = mdp.P[np.arange(n), pi]
    A = np.eye(live.sum()) - gamma * Ppi[np.ix_(live, live)]
    V = np.zeros(n)
    V[live] = np.linalg.solve(A, rbar[np.arange(n), pi][live])
    return V


def value_iteration(mdp: FiniteMDP, rewardfn, gamma: float = 0.99, eps: float = 1e-10,
                    tie_tol: float = TIE_TOL, max_iter: int = 1_000_000,
                    polish: bool = True) -> TabularPolicy:
    """Sweep ``Q = sum_s' P (R + gamma V(s'))`` until the sup-norm change drops below ``eps``.

    Terminal states are absorbing with value 0. With ``polish`` the greedy
    policy is then evaluated exactly and improved until it is stable, which
    removes the residual sweep error before argmax sets are extracted.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    R = reward_tensor(mdp, rewardfn)
    rbar = np.einsum("san,san->sa", mdp.P, R)
    V = np.zeros(mdp.n_states)
    residuals = []
    for _ in range(max_iter):
        Q = _bellman(mdp, rbar, gamma, V)
        Vn = Q.max(axis=1)
        res = float(np.max(np.abs(Vn - V)))
        residuals.append(res)
        V = Vn
        if res < eps:
            break
    Q = _bellman(mdp, rbar, gamma, V)
    if polish:
        pi = Q.argmax(axis=1)
        for _ in range(100):
            Q = _bellman(mdp, rbar, gamma, _evaluate(mdp, rbar, gamma, pi))
            keep = Q[np.arange(len(pi)), pi] >= Q.max(axis=1) - tie_tol
            if keep.all():
                break
            pi = np.where(keep, pi, Q.argmax(axis=1))
    return TabularPolicy(Q, argmax_sets(Q, tie_tol), residuals)


@dataclass(frozen=True)
class InvarianceResult:
    name: str
    n_states: int
    passed: bool
    argmax_equal: bool
    identity_error: float
    first_diff_state: int | None

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = "" if self.first_diff_state is None else f" first differing state {self.first_diff_state}"
        return (f"{verdict} {self.name}: {self.n_states} states, argmax sets "
                f"{'equal' if self.argmax_equal else 'differ'}, "
                f"max |Q' - (Q - psi)| = {self.identity_error:.3e}{extra}")


def verify_invariance(task: TaskSpec, mdp: FiniteMDP, gamma: float = 0.99, eps: float = 1e-10,
                      tie_tol: float = TIE_TOL, identity_tol: float = 1e-6) -> InvarianceResult:
    """Solve under the base and the shaped reward and compare the two optimal Q tables."""
    base = value_iteration(mdp, base_reward_tensor(task, mdp), gamma, eps, tie_tol)
    shaped = value_iteration(mdp, shaped_reward_tensor(task, mdp, gamma), gamma, eps, tie_tol)
    psi = mdp_potential(task, mdp)
    err = float(np.max(np.abs(shaped.q - (base.q - psi[:, None]))))
    diff = [s for s in range(mdp.n_states) if base.greedy[s] != shaped.greedy[s]]
    same = not diff
    return InvarianceResult(mdp.name, mdp.n_states, same and err <= identity_tol, same, err,
                            diff[0] if diff else None)


# ---------------------------------------------------------------------------
# Q-learning


@dataclass
class QLearningConfig:
    alpha: float = 0.1
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.8   # share of the episodes over which epsilon decays
    gamma: float = 0.99
    eval_every: int = 10
    n_eval: int = 5
    window: int = 10                  # bhnr window
    terminal_potential: str = "keep"  # hprs potential at absorbing states; see README

    def epsilon(self, episode: int, episodes: int) -> float:
        span = max(1, int(round(self.eps_decay_fraction * episodes)))
        frac = min(1.0, episode / span)
        return self.eps_start + frac * (self.eps_end - self.eps_start)


@dataclass
class LearningCurve:
    episodes: list = field(default_factory=list)
    f_mean: list = field(default_factory=list)
    f_std: list = field(default_factory=list)
    comfort_mean: list = field(default_factory=list)

    def rows(self):
        for e, m, s in zip(self.episodes, self.f_mean, self.f_std):
            yield e, m, s


def episodes_to_sustained(curve: LearningCurve, threshold: float = 1.5, patience: int = 3):
    """Episode count at the start of the first run of ``patience`` evaluations with F_mean >= threshold."""
    run = 0
    for i, f in enumerate(curve.f_mean):
        run = run + 1 if f >= threshold else 0
        if run == patience:
            return curve.episodes[i - patience + 1]
    return None


def greedy_env_policy(env, policy: TabularPolicy) -> Callable:
    return lambda state: policy.act(env.state_id)


def evaluate_policy(env, policy: TabularPolicy, task: TaskSpec, seeds,
                    assess_task: TaskSpec | None = None) -> list[AssessmentReport]:
    assess_task = assess_task or task
    act = greedy_env_policy(env, policy)
    return [pam(assess_task, rollout(env, act, task, env.horizon, int(s))) for s in seeds]


def q_learning(env, reward, task: TaskSpec, episodes: int, seed: int = 0,
               hyper: QLearningConfig | None = None, assess_task: TaskSpec | None = None):
    """Epsilon-greedy tabular Q-learning; returns ``(TabularPolicy, LearningCurve)``.

    ``reward`` is a variant name or a StepReward. Absorbing endings (safety
    violation, goal) do not bootstrap; a timeout does. Every ``eval_every``
    episodes the greedy policy is rolled out on a fixed set of seeds and
    assessed against ``assess_task`` (default ``task``).
    """
    if not getattr(env, "discrete", False):
        raise NonDiscreteEnvironment(f"{type(env).__name__} has no finite state space")
    if episodes < 0:
        raise ValueError("episodes must be >= 0")
    hp = hyper or QLearningConfig()
    if isinstance(reward, str):
        reward = make_reward(reward, task, gamma=hp.gamma, window=hp.window,
                             terminal_potential=hp.terminal_potential)
    if not isinstance(reward, StepReward):
        raise TypeError("reward must be a variant name or a StepReward")
    rng = np.random.default_rng(seed)
    eval_seeds = np.random.default_rng([seed, 1]).integers(0, 2**31 - 1, size=hp.n_eval)
    n, m = env.n_states, env.n_actions
    Q = np.zeros((n, m))
    curve = LearningCurve()
    ctrl = EpisodeController(task, env.horizon)
    for ep in range(episodes):
        eps = hp.epsilon(ep, episodes)
        state = env.reset(int(rng.integers(0, 2**31 - 1)))
        s = env.state_id
        ctrl.reset()
        reward.start(state)
        while ctrl.running:
            if rng.random() < eps:
                a = int(rng.integers(m))
            else:
                best = np.flatnonzero(Q[s] == Q[s].max())
                a = int(best[rng.integers(len(best))])
            state = env.step(a)
            s2 = env.state_id
            why = ctrl.step_verdict(state)
            absorbing = why in (Termination.SAFETY_VIOLATION, Termination.GOAL_ACHIEVED)
            r = reward.step(state, absorbing, not ctrl.running)
            target = r if absorbing else r + hp.gamma * Q[s2].max()
            Q[s, a] += hp.alpha * (target - Q[s, a])
            s = s2
        if (ep + 1) % hp.eval_every == 0:
            pol = TabularPolicy(Q.copy(), argmax_sets(Q, 0.0))
            reps = evaluate_policy(env, pol, task, eval_seeds, assess_task)
            F = np.array([r.F for r in reps])
            curve.episodes.append(ep + 1)
            curve.f_mean.append(float(F.mean()))
            curve.f_std.append(float(F.std()))
            curve.comfort_mean.append(float(np.mean([r.comfort_avg for r in reps])))
    return TabularPolicy(Q, argmax_sets(Q, 0.0)), curve
