from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, NonStochasticRow

ROW_TOL = 1e-9


@dataclass
class FiniteMDP:
    """Explicit tabular MDP.

    ``P[s, a]`` is a probability vector over successor states. Terminal
    states are absorbing and carry zero value.
    """

    P: np.ndarray
    initial: np.ndarray
    horizon: int
    features: list
    terminal: np.ndarray = None
    name: str = ""
    action_names: tuple = field(default=())

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        if self.P.ndim != 3 or self.P.shape[0] != self.P.shape[2]:
            raise ValueError(f"P must have shape (n, m, n), got {self.P.shape}")
        n = self.P.shape[0]
        self.initial = np.asarray(self.initial, dtype=float)
        if self.terminal is None:
            self.terminal = np.zeros(n, dtype=bool)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        if len(self.features) != n:
            raise ValueError("feature map must cover every state")
        if np.any(self.P < 0) or np.any(self.P > 1 + ROW_TOL):
            raise NonStochasticRow("transition probabilities must lie in [0, 1]")
        sums = self.P.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
        if len(bad):
            s, a = bad[0]
            raise NonStochasticRow(f"row P[{s}, {a}] sums to {sums[s, a]!r}")
        if abs(self.initial.sum() - 1.0) > ROW_TOL:
            raise NonStochasticRow("initial distribution does not sum to 1")

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def n_actions(self) -> int:
        return self.P.shape[1]

    def feature_columns(self) -> dict[str, np.ndarray]:
        keys = self.features[0].keys()
        return {k: np.array([f[k] for f in self.features], dtype=float) for k in keys}


def parse_config(text: str) -> tuple[dict[str, str], list[str]]:
    """``key = value`` lines, optionally followed by ``layout:`` and ASCII rows."""
    values: dict[str, str] = {}
    layout: list[str] = []
    in_layout = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if in_layout:
            if raw.strip():
                layout.append(raw.rstrip())
            continue
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not line:
            continue
        if line.rstrip(":") == "layout" and line.endswith(":"):
            in_layout = True
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        values[key] = value
    return values, layout


def read_config(path) -> tuple[dict[str, str], list[str]]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def pop_float(values: dict, key: str, default: float) -> float:
    try:
        return float(values.pop(key, default))
    except ValueError:
        raise ConfigError(f"{key} must be a number") from None


def pop_int(values: dict, key: str, default: int) -> int:
    try:
        return int(values.pop(key, default))
    except ValueError:
        raise ConfigError(f"{key} must be an integer") from None
