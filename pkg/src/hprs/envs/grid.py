"""Discrete driving track: a car with heading and speed on an ASCII grid.

Layout characters: ``#`` wall, ``.`` free, ``S`` start, ``1``-``9`` waypoints
(the highest digit is the finish line). The car first applies its action
(change speed or heading), then moves ``speed`` cells along its heading; a
wall on the way is a crash, the finish cell on the way ends the lap.
With probability ``slip`` a uniformly random action is executed instead.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InvalidAction
from .base import FiniteMDP, parse_config, pop_float, pop_int

ACTIONS = ("accelerate", "brake", "turn-left", "turn-right", "coast")
HEADINGS = "NESW"
_DELTA = ((-1, 0), (0, 1), (1, 0), (0, -1))
OK, CRASH, GOAL = "ok", "crash", "goal"


class GridDriveEnv:
    discrete = True
    actions = ACTIONS

    def __init__(self, layout, slip=0.1, horizon=40, heading="E", max_speed=2, name="grid"):
        self.layout = [row for row in layout if row.strip()]
        if not self.layout:
            raise ConfigError("empty layout")
        if not 0.0 <= slip <= 1.0:
            raise ConfigError("slip must lie in [0, 1]")
        if heading not in HEADINGS:
            raise ConfigError(f"heading must be one of {HEADINGS}")
        self.slip = float(slip)
        self.horizon = int(horizon)
        self.start_heading = HEADINGS.index(heading)
        self.max_speed = int(max_speed)
        self.name = name
        self._parse_layout()
        self._rng = np.random.default_rng(0)
        self._state = None

    # construction

    @classmethod
    def from_config(cls, path=None, text=None):
        if text is None:
            text = Path(path).read_text(encoding="utf-8")
        values, layout = parse_config(text)
        kw = dict(
            slip=pop_float(values, "slip", 0.1),
            horizon=pop_int(values, "horizon", 40),
            heading=values.pop("heading", "E"),
            max_speed=pop_int(values, "max_speed", 2),
            name=values.pop("name", Path(path).stem if path else "grid"),
        )
        if values:
            raise ConfigError(f"unknown grid settings: {sorted(values)}")
        return cls(layout, **kw)

    def _parse_layout(self):
        h = len(self.layout)
        w = max(len(r) for r in self.layout)
        rows = [r.ljust(w, "#") for r in self.layout]
        self.shape = (h, w)
        self.walls = np.array([[c == "#" for c in r] for r in rows])
        start, waypoints = None, {}
        for i, r in enumerate(rows):
            for j, c in enumerate(r):
                if c == "S":
                    if start is not None:
                        raise ConfigError("layout has more than one start cell")
                    start = (i, j)
                elif c.isdigit() and c != "0":
                    if int(c) in waypoints:
                        raise ConfigError(f"waypoint {c} appears twice")
                    waypoints[int(c)] = (i, j)
                elif c not in "#.":
                    raise ConfigError(f"unexpected layout character {c!r}")
                if c != "#" and (i in (0, h - 1) or j in (0, w - 1)):
                    raise ConfigError("walls must border the track")
        if start is None or not waypoints:
            raise ConfigError("layout needs a start cell 'S' and at least one waypoint")
        self.start = start
        self.waypoints = [waypoints[k] for k in sorted(waypoints)]
        self.goal = self.waypoints[-1]
        self.free = [(i, j) for i in range(h) for j in range(w) if not self.walls[i, j]]
        self._progress()
        self._wall_distance()
        cells = [c for c in self.free if c != self.goal]
        self.cells = cells
        nv = self.max_speed + 1
        self._index = {}
        for ci, c in enumerate(cells):
            for hd in range(4):
                for v in range(nv):
                    self._index[(c, hd, v)] = (ci * 4 + hd) * nv + v
        self.crash_id = len(cells) * 4 * nv
        self.goal_id = self.crash_id + 1
        self.n_states = self.goal_id + 1
        self.n_actions = len(ACTIONS)

    def _bfs(self, src):
        dist = {src: 0}
        prev = {src: None}
        q = deque([src])
        while q:
            c = q.popleft()
            for di, dj in _DELTA:
                n = (c[0] + di, c[1] + dj)
                if not self.walls[n] and n not in dist:
                    dist[n] = dist[c] + 1
                    prev[n] = c
                    q.append(n)
        return dist, prev

    def _progress(self):
        route = [self.start]
        for wp in self.waypoints:
            dist, prev = self._bfs(route[-1])
            if wp not in dist:
                raise ConfigError(f"waypoint {wp} is unreachable")
            path = []
            c = wp
            while c != route[-1]:
                path.append(c)
                c = prev[c]
            route.extend(reversed(path))
        self.route = route
        span = max(len(route) - 1, 1)
        prog = {}
        for k, c in enumerate(route):
            prog[c] = max(prog.get(c, 0.0), k / span)
        for c in self.free:
            if c not in prog:
                dist, _ = self._bfs(c)
                best = min(dist[r] for r in route if r in dist)
                prog[c] = min(prog[r] for r in route if dist.get(r) == best)
        cap = (span - 1) / span
        for c in self.free:
            prog[c] = 1.0 if c == self.goal else min(prog[c], cap)
        self.progress = prog

    def _wall_distance(self):
        walls = np.argwhere(self.walls)
        self.d_walls = {
            c: float(np.min(np.abs(walls[:, 0] - c[0]) + np.abs(walls[:, 1] - c[1])))
            for c in self.free
        }

    # features

    def sample(self, cell, heading, speed, status=OK, last_free=None):
        if status == CRASH:
            ref = last_free if last_free is not None else cell
            return {"row": float(cell[0]), "col": float(cell[1]), "heading": float(heading),
                    "v": float(speed), "L": self.progress[ref], "d_walls": -1.0}
        return {"row": float(cell[0]), "col": float(cell[1]), "heading": float(heading),
                "v": float(speed), "L": self.progress[cell], "d_walls": self.d_walls[cell]}

    def features(self, state_id: int) -> dict:
        if state_id == self.crash_id:
            return {"row": -1.0, "col": -1.0, "heading": 0.0, "v": 0.0, "L": 0.0, "d_walls": -1.0}
        if state_id == self.goal_id:
            g = self.goal
            return {"row": float(g[0]), "col": float(g[1]), "heading": 0.0, "v": 1.0,
                    "L": 1.0, "d_walls": self.d_walls[g]}
        nv = self.max_speed + 1
        v = state_id % nv
        hd = (state_id // nv) % 4
        cell = self.cells[state_id // (nv * 4)]
        return self.sample(cell, hd, v)

    def state_id_of(self, cell, heading, speed, status=OK) -> int:
        if status == CRASH:
            return self.crash_id
        if status == GOAL:
            return self.goal_id
        return self._index[(cell, heading, speed)]

    # dynamics

    def _move(self, cell, heading, speed, action):
        """Deterministic successor ``(cell, heading, speed, status, last_free)``."""
        if action == 0:
            speed = min(speed + 1, self.max_speed)
        elif action == 1:
            speed = max(speed - 1, 0)
        elif action == 2:
            heading = (heading - 1) % 4
        elif action == 3:
            heading = (heading + 1) % 4
        di, dj = _DELTA[heading]
        last = cell
        for _ in range(speed):
            nxt = (last[0] + di, last[1] + dj)
            if self.walls[nxt]:
                return nxt, heading, speed, CRASH, last
            last = nxt
            if last == self.goal:
                return last, heading, speed, GOAL, last
        return last, heading, speed, OK, last

    def _check_action(self, action) -> int:
        if isinstance(action, str):
            if action not in ACTIONS:
                raise InvalidAction(f"unknown action {action!r}")
            return ACTIONS.index(action)
        try:
            a = int(action)
        except (TypeError, ValueError):
            raise InvalidAction(f"invalid action {action!r}") from None
        if a != action or not 0 <= a < len(ACTIONS):
            raise InvalidAction(f"action index must be in 0..{len(ACTIONS) - 1}, got {action!r}")
        return a

    def reset(self, seed: int = 0) -> dict:
        self._rng = np.random.default_rng(seed)
        self._state = (self.start, self.start_heading, 0, OK)
        return self.sample(self.start, self.start_heading, 0)

    @property
    def state_id(self) -> int:
        cell, hd, v, status = self._state
        return self.state_id_of(cell, hd, v, status)

    def step(self, action) -> dict:
        a = self._check_action(action)
        cell, hd, v, status = self._state
        if status != OK:
            raise InvalidAction("episode state is absorbing; call reset()")
        if self.slip > 0 and self._rng.random() < self.slip:
            a = int(self._rng.integers(len(ACTIONS)))
        cell, hd, v, status, last = self._move(cell, hd, v, a)
        self._state = (cell, hd, v, status)
        return self.sample(cell, hd, v, status, last)

    def action_record(self, action) -> dict:
        a = self._check_action(action)
        return {"throttle": float(a == 0) - float(a == 1), "steer": float(a == 3) - float(a == 2)}

    def transition_matrix(self) -> FiniteMDP:
        n, m = self.n_states, self.n_actions
        P = np.zeros((n, m, n))
        for (cell, hd, v), s in self._index.items():
            succ = []
            for a in range(m):
                c2, h2, v2, st, _ = self._move(cell, hd, v, a)
                succ.append(self.state_id_of(c2, h2, v2, st))
            for a in range(m):
                P[s, a, succ[a]] += 1.0 - self.slip
                for b in range(m):
                    P[s, a, succ[b]] += self.slip / m
        for t in (self.crash_id, self.goal_id):
            P[t, :, t] = 1.0
        init = np.zeros(n)
        init[self._index[(self.start, self.start_heading, 0)]] = 1.0
        terminal = np.zeros(n, dtype=bool)
        terminal[[self.crash_id, self.goal_id]] = True
        feats = [self.features(s) for s in range(n)]
        return FiniteMDP(P, init, self.horizon, feats, terminal, self.name, ACTIONS)
