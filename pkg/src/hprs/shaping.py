"""Requirement scores, the hierarchical potential and the shaped reward.

Scores live in ``[0, 1]``: safety requirements score the indicator of
``f >= 0``; target and comfort requirements score the negatively saturated
signal ``1 - min(0, f) / l``. The potential weighs each score by the
product of the scores of all strictly more important requirements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyWindow, WeightDimensionMismatch
from .spec_lang import RequirementSpec
from .task import TaskSpec
from .trace import Termination, Trace, task_robustness

TERMINAL_CONVENTIONS = ("zero", "keep")
DECREASING_CLASS_WEIGHTS = {"safety": 4.0, "target": 2.0, "comfort": 1.0}


def indicator(f):
    return (np.asarray(f) >= 0).astype(float)


def saturated_score(f, l, u):
    """``1 - min(0, clip(f, l, u)) / l``; 1 when satisfied, 0 at the worst violation."""
    fc = np.clip(np.asarray(f, dtype=float), l, u)
    return 1.0 - np.minimum(fc, 0.0) / l


def score_b(req: RequirementSpec, state: Mapping) -> int:
    return int(req.signal(state) >= 0)


def score_c(req: RequirementSpec, state: Mapping) -> float:
    return float(saturated_score(req.signal(state), req.l, req.u))


def score(req: RequirementSpec, state: Mapping) -> float:
    return float(score_b(req, state)) if req.cls.is_safety else score_c(req, state)


def score_vector(task: TaskSpec, state: Mapping) -> dict[str, float]:
    return {r.name: score(r, state) for r in task.requirements}


def score_matrix(task: TaskSpec, env: Mapping) -> np.ndarray:
    """Scores for a batch of states given as columns; shape ``(n, |Φ|)``."""
    cols = []
    n = None
    for r in task.requirements:
        f = np.atleast_1d(np.asarray(r.signal(env), dtype=float))
        cols.append(indicator(f) if r.cls.is_safety else saturated_score(f, r.l, r.u))
        n = max(n or 0, f.shape[0])
    return np.column_stack([np.broadcast_to(c, (n,)) for c in cols])


class _Layout:
    """Column indices of each class inside ``task.requirements``."""

    def __init__(self, task: TaskSpec):
        self.safety = [i for i, r in enumerate(task.requirements) if r.cls.is_safety]
        self.target = next(i for i, r in enumerate(task.requirements) if r.cls.is_target)
        self.comfort = [i for i, r in enumerate(task.requirements) if r.cls.is_comfort]


def potential_from_scores(task: TaskSpec, scores: np.ndarray) -> np.ndarray:
    """Hierarchical potential from a score matrix, using the class structure.

    With safety gate ``g = prod(safety)``:
    ``sum(safety) + g * target + g * target * sum(comfort)``.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    lay = _Layout(task)
    s = scores[:, lay.safety]
    gate = np.prod(s, axis=1)
    gated_target = gate * scores[:, lay.target]
    return s.sum(axis=1) + gated_target + gated_target * scores[:, lay.comfort].sum(axis=1)


def potential(task: TaskSpec, state: Mapping) -> float:
    return float(potential_from_scores(task, score_matrix(task, state))[0])


def potentials(task: TaskSpec, trace: Trace) -> np.ndarray:
    return potential_from_scores(task, score_matrix(task, trace.env()))


def base_reward(task: TaskSpec, state_next: Mapping) -> int:
    """Sparse reward: 1 when the target predicate holds in the reached state."""
    return int(task.target.signal(state_next) >= 0)


@dataclass(frozen=True)
class ShapingStep:
    base: float
    potential_before: float
    potential_after: float
    shaped: float


def shaped_reward(task: TaskSpec, state: Mapping, state_next: Mapping, *, terminal: bool = False,
                  gamma: float = 1.0, terminal_potential: str = "zero") -> ShapingStep:
    """``R + gamma * Psi(s') - Psi(s)``; ``Psi(s') = 0`` for absorbing ``s'`` by default."""
    if terminal_potential not in TERMINAL_CONVENTIONS:
        raise ValueError(f"terminal_potential must be one of {TERMINAL_CONVENTIONS}")
    before = potential(task, state)
    after = 0.0 if terminal and terminal_potential == "zero" else potential(task, state_next)
    base = float(base_reward(task, state_next))
    return ShapingStep(base, before, after, base + gamma * after - before)


# ---------------------------------------------------------------------------
# baselines


def morl_weights(task: TaskSpec, weights="uniform") -> np.ndarray:
    """Linear-scalarization weights aligned with ``task.requirements``."""
    k = len(task)
    if isinstance(weights, str):
        if weights == "uniform":
            return np.full(k, 1.0 / k)
        if weights == "decreasing":
            groups = [r.cls.group for r in task.requirements]
            sizes = {g: groups.count(g) for g in set(groups)}
            w = np.array([DECREASING_CLASS_WEIGHTS[g] / sizes[g] for g in groups])
            return w / w.sum()
        raise ValueError(f"unknown weight scheme {weights!r}")
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise WeightDimensionMismatch(f"expected {k} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-9):
        raise WeightDimensionMismatch("weights must be nonnegative and sum to 1")
    return w


def morl_reward(task: TaskSpec, state_next: Mapping, weights="uniform") -> float:
    w = morl_weights(task, weights)
    return float(score_matrix(task, state_next)[0] @ w)


def tltl_reward(task: TaskSpec, trace: Trace, combine: str = "min") -> float:
    """Episode-level robustness, paid once at the end of the episode."""
    return task_robustness(task, trace, combine)


def bhnr_reward(task: TaskSpec, window: Trace, combine: str = "min") -> float:
    """Robustness of the task formula over the most recent window of states."""
    if len(window) == 0:
        raise EmptyWindow("window must hold at least one state")
    return task_robustness(task, window, combine)


def bhnr_series(task: TaskSpec, trace: Trace, horizon: int = 10, combine: str = "min") -> np.ndarray:
    """BHNR reward at every step ``t``, over states ``max(0, t-H+1) .. t``."""
    if horizon < 1:
        raise EmptyWindow("window length must be >= 1")
    out = np.empty(len(trace))
    for t in range(len(trace)):
        out[t] = bhnr_reward(task, trace.window(max(0, t - horizon + 1), t + 1), combine)
    return out


# ---------------------------------------------------------------------------
# whole-trace report


@dataclass(frozen=True)
class ShapingReport:
    scores: np.ndarray        # (n, |Φ|) per state
    psi: np.ndarray           # (n,) potential per state
    base: np.ndarray          # (n-1,) per transition into states[1:]
    psi_before: np.ndarray
    psi_after: np.ndarray
    shaped: np.ndarray
    morl_unif: np.ndarray
    morl_decr: np.ndarray
    bhnr: np.ndarray
    tltl_final: float
    names: tuple

    def rows(self):
        n = len(self.base)
        for i in range(n):
            yield {
                "t": i + 1,
                "base": self.base[i],
                "psi_before": self.psi_before[i],
                "psi_after": self.psi_after[i],
                "shaped": self.shaped[i],
                "morl_unif": self.morl_unif[i],
                "morl_decr": self.morl_decr[i],
                "tltl_final": self.tltl_final if i == n - 1 else None,
                "bhnr": self.bhnr[i],
            }


def is_absorbing(trace: Trace) -> bool:
    return trace.termination in (Termination.SAFETY_VIOLATION, Termination.GOAL_ACHIEVED)


def shape_trace(task: TaskSpec, trace: Trace, *, gamma: float = 1.0, terminal_potential: str = "zero",
                window: int = 10, combine: str = "min") -> ShapingReport:
    if terminal_potential not in TERMINAL_CONVENTIONS:
        raise ValueError(f"terminal_potential must be one of {TERMINAL_CONVENTIONS}")
    env = trace.env()
    S = score_matrix(task, env)
    psi = potential_from_scores(task, S)
    f_target = np.broadcast_to(np.asarray(task.target.signal(env), dtype=float), (len(trace),))
    base = (f_target[1:] >= 0).astype(float)
    before = psi[:-1].copy()
    after = psi[1:].copy()
    if len(after) and is_absorbing(trace) and terminal_potential == "zero":
        after[-1] = 0.0
    shaped = base + gamma * after - before
    unif = S[1:] @ morl_weights(task, "uniform")
    decr = S[1:] @ morl_weights(task, "decreasing")
    bhnr = bhnr_series(task, trace, window, combine)[1:]
    return ShapingReport(S, psi, base, before, after, shaped, unif, decr, bhnr,
                         tltl_reward(task, trace, combine), tuple(task.names))


class ShapingSession:
    """Streaming shaper for one episode; holds the previous state's potential."""

    def __init__(self, task: TaskSpec, gamma: float = 1.0, terminal_potential: str = "zero"):
        self.task = task
        self.gamma = gamma
        self.terminal_potential = terminal_potential
        self._prev = None

    def reset(self, state: Mapping) -> float:
        self._prev = potential(self.task, state)
        return self._prev

    def step(self, state_next: Mapping, terminal: bool = False) -> ShapingStep:
        if self._prev is None:
            raise RuntimeError("call reset() with the initial state first")
        psi_next = potential(self.task, state_next)
        after = 0.0 if terminal and self.terminal_potential == "zero" else psi_next
        base = float(base_reward(self.task, state_next))
        step = ShapingStep(base, self._prev, after, base + self.gamma * after - self._prev)
        self._prev = psi_next
        return step


def scores_dict(task: TaskSpec, row: Sequence[float]) -> dict[str, float]:
    return dict(zip(task.names, map(float, row)))
