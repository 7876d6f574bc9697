"""Episode traces and their Boolean / quantitative satisfaction semantics."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyTrace, HPRSError, NotComfort, UnknownVariable
from .spec_lang import ReqClass, RequirementSpec, VarDecl


class Termination(enum.Enum):
    RUNNING = "running"
    SAFETY_VIOLATION = "safety"
    GOAL_ACHIEVED = "goal"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Trace:
    """A finite episode ``s_0, s_1, ...`` of named real-valued samples.

    ``actions[i]`` (when present) is the action that produced ``states[i]``;
    the first entry is usually empty. Variables missing from a state are
    looked up in its action record.
    """

    states: tuple
    actions: tuple | None = None
    horizon: int | None = None
    termination: Termination = Termination.RUNNING
    clamped: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(dict(s) for s in self.states))
        if self.actions is not None:
            object.__setattr__(self, "actions", tuple(dict(a or {}) for a in self.actions))
        if self.horizon is not None and len(self.states) > self.horizon + 1:
            raise ValueError(f"trace has {len(self.states)} states, more than horizon+1")

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def _columns(self) -> dict[str, np.ndarray]:
        return {}

    def column(self, name: str) -> np.ndarray:
        cols = self._columns
        if name not in cols:
            vals = []
            for i, s in enumerate(self.states):
                if name in s:
                    vals.append(s[name])
                elif self.actions is not None and name in self.actions[i]:
                    vals.append(self.actions[i][name])
                else:
                    raise UnknownVariable(f"{name!r} missing from state {i}")
            cols[name] = np.asarray(vals, dtype=float)
        return cols[name]

    def env(self, start: int = 0, stop: int | None = None) -> "_Columns":
        return _Columns(self, start, stop)

    def window(self, start: int, stop: int) -> "Trace":
        acts = None if self.actions is None else self.actions[start:stop]
        return Trace(self.states[start:stop], acts, None, Termination.RUNNING)


class _Columns(Mapping):
    def __init__(self, trace, start, stop):
        self.trace, self.sl = trace, slice(start, stop)

    def __getitem__(self, name):
        return self.trace.column(name)[self.sl]

    def __iter__(self):
        return iter(self.trace.states[0] if self.trace.states else ())

    def __len__(self):
        return len(self.trace.states[0]) if self.trace.states else 0


def clamp_state(state: Mapping[str, float], decls: Iterable[VarDecl]) -> tuple[dict, int]:
    out = dict(state)
    n = 0
    for d in decls:
        if d.name in out:
            v = float(out[d.name])
            c = min(max(v, d.lo), d.hi)
            if c != v:
                n += 1
            out[d.name] = c
    return out, n


def make_trace(states: Sequence[Mapping], decls: Iterable[VarDecl] = (), actions=None,
               horizon=None, termination=Termination.RUNNING) -> Trace:
    """Build a trace, clamping declared variables to their domains."""
    decls = list(decls)
    clamped, total = [], 0
    for s in states:
        c, n = clamp_state(s, decls)
        clamped.append(c)
        total += n
    return Trace(tuple(clamped), actions, horizon, termination, total)


def load_trace(path, decls: Iterable[VarDecl] = (), horizon=None) -> Trace:
    """Read a JSON-lines trace (one ``{"t", "state", "action", "done", "why"}`` per step)."""
    states, actions = [], []
    termination = Termination.RUNNING
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise HPRSError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(rec, dict) or not isinstance(rec.get("state"), dict):
                raise HPRSError(f"{path}:{lineno}: each record needs a 'state' object")
            states.append(rec["state"])
            actions.append(rec.get("action") or {})
            if rec.get("done"):
                why = rec.get("why", "timeout")
                try:
                    termination = Termination(why)
                except ValueError:
                    raise HPRSError(f"{path}:{lineno}: unknown termination reason {why!r}") from None
                break
    if not states:
        raise EmptyTrace(f"{path}: no states")
    return make_trace(states, decls, actions, horizon, termination)


def dump_trace(trace: Trace, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        for line in trace_records(trace):
            fh.write(line + "\n")


def trace_records(trace: Trace) -> list[str]:
    out = []
    last = len(trace) - 1
    for t, s in enumerate(trace.states):
        rec = {"t": t, "state": s}
        if trace.actions is not None:
            rec["action"] = trace.actions[t]
        done = t == last and trace.termination is not Termination.RUNNING
        rec["done"] = done
        if done:
            rec["why"] = trace.termination.value
        out.append(json.dumps(rec, sort_keys=True))
    return out


# ---------------------------------------------------------------------------
# semantics on signal values


def signal_values(req: RequirementSpec, trace: Trace) -> np.ndarray:
    if len(trace) == 0:
        raise EmptyTrace("trace has no states")
    vals = req.signal(trace.env())
    return np.broadcast_to(np.asarray(vals, dtype=float), (len(trace),))


def satisfied(cls: ReqClass, f: np.ndarray) -> bool:
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        raise EmptyTrace("trace has no states")
    if cls is ReqClass.TARGET_ACHIEVE:
        return bool(np.any(f >= 0))
    if cls is ReqClass.TARGET_CONQUER:
        suffix_ok = np.minimum.accumulate(f[::-1])[::-1] >= 0
        return bool(np.any(suffix_ok))
    if cls is ReqClass.SAFETY:
        return bool(np.all(f >= 0))
    return True


def robustness_values(cls: ReqClass, f: np.ndarray) -> float:
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        raise EmptyTrace("trace has no states")
    if cls is ReqClass.TARGET_ACHIEVE:
        return float(np.max(f))
    if cls is ReqClass.TARGET_CONQUER:
        return float(np.max(np.minimum.accumulate(f[::-1])))
    return float(np.min(f))


def sigma(req: RequirementSpec, trace: Trace) -> bool:
    """Boolean satisfaction of one requirement on a trace."""
    return satisfied(req.cls, signal_values(req, trace))


def sigma_all(reqs: Iterable[RequirementSpec], trace: Trace) -> bool:
    return all(sigma(r, trace) for r in reqs)


def sigma_task(task, trace: Trace) -> bool:
    return sigma_all(task.requirements, trace)


def sigma_avg(req: RequirementSpec, trace: Trace) -> float:
    """Fraction of states at which a comfort requirement holds."""
    if not req.cls.is_comfort:
        raise NotComfort(f"{req.name!r} is not a comfort requirement")
    f = signal_values(req, trace)
    return float(np.mean(f >= 0))


def sigma_avg_set(reqs: Sequence[RequirementSpec], trace: Trace, empty: float = 1.0) -> float:
    """Average of per-requirement ``sigma_avg``; ``empty`` for an empty set."""
    if len(trace) == 0:
        raise EmptyTrace("trace has no states")
    if not reqs:
        return empty
    return float(np.mean([sigma_avg(r, trace) for r in reqs]))


def robustness(req: RequirementSpec, trace: Trace) -> float:
    """Infinity-norm quantitative semantics; comfort uses the globally (min) reading."""
    return robustness_values(req.cls, signal_values(req, trace))


def task_robustness(task, trace: Trace, combine: str = "min") -> float:
    """Robustness of the whole task as one formula (min- or mean-combination)."""
    vals = [robustness(r, trace) for r in task.requirements]
    if combine == "min":
        return float(min(vals))
    if combine == "mean":
        return float(np.mean(vals))
    raise ValueError(f"combine must be 'min' or 'mean', got {combine!r}")
