"""Tasks as partially ordered requirement sets.

Requirements are partitioned into safety, target and comfort classes. The
precedence relation is fixed by class: every safety requirement precedes
every non-safety requirement, and the target precedes every comfort
requirement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyTask, MultipleTargets, NoTarget, UnknownRequirement
from .spec_lang import RequirementSpec, TaskSpecDraft, VarDecl, parse_spec


class NoSafetyWarning(UserWarning):
    """A task without safety requirements; the potential loses its gating layer."""


@dataclass(frozen=True)
class TaskSpec:
    safety: tuple[RequirementSpec, ...]
    target: RequirementSpec
    comfort: tuple[RequirementSpec, ...]
    decls: tuple[VarDecl, ...] = ()
    consts: dict = field(default_factory=dict, compare=False, hash=False)
    requirements: tuple[RequirementSpec, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.requirements:
            object.__setattr__(self, "requirements", (*self.safety, self.target, *self.comfort))

    def __len__(self) -> int:
        return len(self.requirements)

    def __iter__(self):
        return iter(self.requirements)

    def __getitem__(self, name: str) -> RequirementSpec:
        for r in self.requirements:
            if r.name == name:
                return r
        raise UnknownRequirement(f"no requirement named {name!r}")

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.requirements]

    @property
    def variables(self) -> list[str]:
        return [d.name for d in self.decls]

    @property
    def domain(self) -> dict[str, tuple[float, float]]:
        return {d.name: (d.lo, d.hi) for d in self.decls}

    def precedes(self, a: RequirementSpec, b: RequirementSpec) -> bool:
        """``a ≺ b``: a is strictly more important than b."""
        self._check(a)
        self._check(b)
        return _precedes(a, b)

    def predecessors(self, phi: RequirementSpec) -> list[RequirementSpec]:
        self._check(phi)
        return [p for p in self.requirements if _precedes(p, phi)]

    def without_comfort(self) -> "TaskSpec":
        """The comfort-ablated task (same safety and target)."""
        reqs = tuple(r for r in self.requirements if not r.cls.is_comfort)
        return TaskSpec(self.safety, self.target, (), self.decls, self.consts, reqs)

    def _check(self, phi: RequirementSpec) -> None:
        if not any(phi is r or phi == r for r in self.requirements):
            raise UnknownRequirement(f"{getattr(phi, 'name', phi)!r} is not part of this task")


def _precedes(a: RequirementSpec, b: RequirementSpec) -> bool:
    return (a.cls.is_safety and not b.cls.is_safety) or (a.cls.is_target and b.cls.is_comfort)


def predecessors(task: TaskSpec, phi: RequirementSpec) -> list[RequirementSpec]:
    return task.predecessors(phi)


def validate(draft: TaskSpecDraft) -> TaskSpec:
    """Partition a parsed draft into a task, enforcing a unique target."""
    reqs = draft.requirements
    if not reqs:
        raise EmptyTask("the requirements file declares no requirements")
    targets = [r for r in reqs if r.cls.is_target]
    if not targets:
        raise NoTarget("a task needs exactly one 'achieve' or 'conquer' requirement")
    if len(targets) > 1:
        lines = ", ".join(str(t.line) for t in targets)
        raise MultipleTargets(f"the target must be unique, found {len(targets)} (lines {lines})")
    safety = tuple(r for r in reqs if r.cls.is_safety)
    if not safety:
        warnings.warn("task has no safety requirements", NoSafetyWarning, stacklevel=2)
    comfort = tuple(r for r in reqs if r.cls.is_comfort)
    return TaskSpec(safety, targets[0], comfort, tuple(draft.decls),
                    draft.const_values(), tuple(reqs))


def load_task(path) -> TaskSpec:
    return validate(parse_spec(Path(path).read_bytes()))


def task_from_text(text: str) -> TaskSpec:
    return validate(parse_spec(text))
