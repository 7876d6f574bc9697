"""scikit-learn style wrappers around the shaping and learning pipeline.

``HPRSShaper`` turns a matrix of states (one column per task variable) into
requirement scores; ``TabularQLearner`` fits a Q table on a discrete env.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import EmptyInput, UnknownVariable
from .shaping import TERMINAL_CONVENTIONS, morl_weights, potential_from_scores, score_matrix
from .solvers import QLearningConfig, q_learning
from .task import TaskSpec, load_task, task_from_text


def resolve_task(spec) -> TaskSpec:
    """A TaskSpec, a path to a ``.req`` file, or requirement source text."""
    if isinstance(spec, TaskSpec):
        return spec
    if isinstance(spec, Path) or (isinstance(spec, str) and "\n" not in spec and spec.endswith(".req")):
        return load_task(spec)
    if isinstance(spec, str):
        return task_from_text(spec)
    raise TypeError(f"cannot build a task from {type(spec).__name__}")


def check_state_matrix(X, variables) -> np.ndarray:
    """Validate a 2-D finite float matrix with one column per variable."""
    if hasattr(X, "columns"):
        missing = [v for v in variables if v not in X.columns]
        if missing:
            raise UnknownVariable(f"missing columns: {missing}")
        X = X[list(variables)]
    X = check_array(X, dtype=float, ensure_2d=True, ensure_all_finite=True, ensure_min_samples=0)
    if X.shape[1] != len(variables):
        raise ValueError(f"expected {len(variables)} columns ({', '.join(variables)}), got {X.shape[1]}")
    return X


def check_gamma(gamma) -> float:
    g = float(gamma)
    if not 0.0 < g <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma!r}")
    return g


class HPRSShaper(TransformerMixin, BaseEstimator):
    """Requirement scores, potential and shaped reward for batches of states."""

    def __init__(self, spec=None, gamma=1.0, terminal_potential="zero", clamp=True):
        self.spec = spec
        self.gamma = gamma
        self.terminal_potential = terminal_potential
        self.clamp = clamp

    def fit(self, X=None, y=None):
        if self.spec is None:
            raise ValueError("spec is required")
        if self.terminal_potential not in TERMINAL_CONVENTIONS:
            raise ValueError(f"terminal_potential must be one of {TERMINAL_CONVENTIONS}")
        check_gamma(self.gamma)
        self.task_ = resolve_task(self.spec)
        self.variables_ = list(self.task_.variables)
        self.feature_names_in_ = np.array(self.variables_, dtype=object)
        self.n_features_in_ = len(self.variables_)
        if X is not None:
            check_state_matrix(X, self.variables_)
        return self

    def _columns(self, X) -> dict:
        X = check_state_matrix(X, self.variables_)
        if X.shape[0] == 0:
            raise EmptyInput("no states given")
        if self.clamp:
            for j, name in enumerate(self.variables_):
                d = next((d for d in self.task_.decls if d.name == name), None)
                if d is not None:
                    X[:, j] = np.clip(X[:, j], d.lo, d.hi)
        return {v: X[:, j] for j, v in enumerate(self.variables_)}

    def transform(self, X):
        """Score matrix of shape ``(n_states, n_requirements)``."""
        check_is_fitted(self, "task_")
        return score_matrix(self.task_, self._columns(X))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "task_")
        return np.array(self.task_.names, dtype=object)

    def potential(self, X) -> np.ndarray:
        return potential_from_scores(self.task_, self.transform(X))

    def reward(self, X, X_next, terminal=None) -> np.ndarray:
        """Shaped reward for aligned rows of ``X`` and ``X_next``."""
        psi = self.potential(X)
        psi_next = self.potential(X_next)
        if len(psi) != len(psi_next):
            raise ValueError("X and X_next must have the same number of rows")
        if terminal is not None and self.terminal_potential == "zero":
            psi_next = np.where(np.asarray(terminal, dtype=bool), 0.0, psi_next)
        cols = self._columns(X_next)
        base = (np.asarray(self.task_.target.signal(cols), dtype=float) >= 0).astype(float)
        return base + check_gamma(self.gamma) * psi_next - psi

    def scalarize(self, X, weights="uniform") -> np.ndarray:
        """Linear scalarization of the scores, the multi-objective baseline."""
        return self.transform(X) @ morl_weights(self.task_, weights)


class TabularQLearner(BaseEstimator):
    """Q-learning on a discrete env; ``fit`` trains, ``predict`` maps state ids to greedy actions."""

    def __init__(self, spec=None, reward="hprs", episodes=500, alpha=0.1, gamma=0.99,
                 eps_start=1.0, eps_end=0.05, eval_every=10, n_eval=5,
                 terminal_potential="keep", random_state=0):
        self.spec = spec
        self.reward = reward
        self.episodes = episodes
        self.alpha = alpha
        self.gamma = gamma
        self.eps_start = eps_start
        self.eps_end = eps_end
        self.eval_every = eval_every
        self.n_eval = n_eval
        self.terminal_potential = terminal_potential
        self.random_state = random_state

    def fit(self, env, y=None):
        task = resolve_task(self.spec)
        hp = QLearningConfig(alpha=self.alpha, eps_start=self.eps_start, eps_end=self.eps_end,
                             gamma=check_gamma(self.gamma), eval_every=self.eval_every,
                             n_eval=self.n_eval, terminal_potential=self.terminal_potential)
        self.policy_, self.curve_ = q_learning(env, self.reward, task, int(self.episodes),
                                               int(self.random_state), hp)
        self.q_ = self.policy_.q
        return self

    def predict(self, states):
        check_is_fitted(self, "q_")
        s = check_array(np.asarray(states).reshape(-1, 1), dtype=int).ravel()
        if np.any((s < 0) | (s >= self.q_.shape[0])):
            raise ValueError("state id out of range")
        return np.array([self.policy_.act(int(i)) for i in s])

