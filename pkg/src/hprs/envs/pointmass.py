"""Planar point mass that must settle inside a goal disk while avoiding an obstacle disk."""

from __future__ import annotations

import copy
import math
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InvalidAction
from .base import parse_config, pop_float, pop_int

# discrete action set used by planners: zero plus the 8 compass accelerations
ACTIONS = tuple((float(ax), float(ay)) for ax in (-1, 0, 1) for ay in (-1, 0, 1))

DEFAULTS = dict(
    dt=0.1, horizon=100, accel=1.0, vmax=1.0,
    start_x=0.0, start_y=1.2, x_offset=0.1,
    goal_x=0.0, goal_y=0.0,
    obstacle_x=0.1, obstacle_y=0.5, obstacle_radius=0.15,
    x_min=-1.2, x_max=1.2, y_min=-0.2, y_max=1.6,
)


class PointMassEnv:
    discrete = False
    actions = ACTIONS

    def __init__(self, name="pointmass", **params):
        unknown = set(params) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown point-mass settings: {sorted(unknown)}")
        p = {**DEFAULTS, **params}
        for k, v in p.items():
            setattr(self, k, float(v))
        self.horizon = int(p["horizon"])
        if self.dt <= 0 or self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ConfigError("invalid point-mass geometry")
        self.name = name
        self.pos = np.zeros(2)
        self.vel = np.zeros(2)
        self._rng = np.random.default_rng(0)
        self.d_goal_max = max(math.hypot(x - self.goal_x, y - self.goal_y)
                              for x in (self.x_min, self.x_max) for y in (self.y_min, self.y_max))

    @classmethod
    def from_config(cls, path=None, text=None):
        if text is None:
            text = Path(path).read_text(encoding="utf-8")
        values, layout = parse_config(text)
        if layout:
            raise ConfigError("point-mass configs take no layout")
        name = values.pop("name", Path(path).stem if path else "pointmass")
        kw = {}
        for key in list(values):
            if key == "horizon":
                kw[key] = pop_int(values, key, 100)
            else:
                kw[key] = pop_float(values, key, 0.0)
        return cls(name=name, **kw)

    @property
    def domain(self) -> dict[str, tuple[float, float]]:
        return {
            "x": (self.x_min, self.x_max), "y": (self.y_min, self.y_max),
            "vx": (-self.vmax, self.vmax), "vy": (-self.vmax, self.vmax),
            "d_goal": (0.0, self.d_goal_max),
            "d_obs": (-self.obstacle_radius, self.d_goal_max + self.obstacle_radius * 4),
        }

    def observe(self) -> dict:
        x, y = self.pos
        vx, vy = self.vel
        d_goal = math.hypot(x - self.goal_x, y - self.goal_y)
        d_obs = math.hypot(x - self.obstacle_x, y - self.obstacle_y) - self.obstacle_radius
        s = {"x": x, "y": y, "vx": vx, "vy": vy, "d_goal": d_goal, "d_obs": d_obs}
        return {k: float(min(max(v, self.domain[k][0]), self.domain[k][1])) for k, v in s.items()}

    def reset(self, seed: int = 0) -> dict:
        self._rng = np.random.default_rng(seed)
        x0 = self.start_x + self._rng.uniform(-self.x_offset, self.x_offset)
        self.pos = np.array([x0, self.start_y])
        self.vel = np.zeros(2)
        return self.observe()

    def _check_action(self, action) -> np.ndarray:
        if isinstance(action, (int, np.integer)) and not isinstance(action, bool):
            if not 0 <= action < len(ACTIONS):
                raise InvalidAction(f"action index must be in 0..{len(ACTIONS) - 1}")
            return np.array(ACTIONS[action])
        a = np.asarray(action, dtype=float)
        if a.shape != (2,) or not np.all(np.isfinite(a)):
            raise InvalidAction(f"action must be a finite (ax, ay) pair, got {action!r}")
        return np.clip(a, -1.0, 1.0)

    def step(self, action) -> dict:
        a = self._check_action(action) * self.accel
        self.vel = np.clip(self.vel + a * self.dt, -self.vmax, self.vmax)
        self.pos = self.pos + self.vel * self.dt
        self.pos = np.clip(self.pos, [self.x_min, self.y_min], [self.x_max, self.y_max])
        return self.observe()

    def action_record(self, action) -> dict:
        ax, ay = self._check_action(action)
        return {"ax": float(ax), "ay": float(ay)}

    def clone(self) -> "PointMassEnv":
        return copy.deepcopy(self)
