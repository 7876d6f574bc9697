"""Policy-assessment metric and success-rate aggregation.

``F = sigma(safety) + 1/2 sigma(target) + 1/4 sigma_avg(comfort)`` so that
``F >= 1`` exactly when the episode was safe and ``F >= 1.5`` exactly when
the whole task was satisfied.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInput, EmptyTrace
from .task import TaskSpec
from .trace import Trace, sigma, sigma_all, sigma_avg_set

F_MAX = 1.75
SAFE_THRESHOLD = 1.0
TASK_THRESHOLD = 1.5
DEFAULT_COMFORT_CUTOFF = 0.5


class Category(enum.Enum):
    UNSAFE = "unsafe"
    SAFE_ONLY = "safe_only"
    TASK_SATISFIED = "task_satisfied"


@dataclass(frozen=True)
class AssessmentReport:
    F: float
    sat_safety: bool
    sat_target: bool
    comfort_avg: float
    category: Category


def pam_value(sat_safety: bool, sat_target: bool, comfort_avg: float) -> float:
    return float(sat_safety) + 0.5 * float(sat_target) + 0.25 * float(comfort_avg)


def categorize(F: float) -> Category:
    if F >= TASK_THRESHOLD:
        return Category.TASK_SATISFIED
    if F >= SAFE_THRESHOLD:
        return Category.SAFE_ONLY
    return Category.UNSAFE


def pam(task: TaskSpec, trace: Trace) -> AssessmentReport:
    """Assess one episode. A task without comfort requirements has comfort_avg 1."""
    if len(trace) == 0:
        raise EmptyTrace("trace has no states")
    s = sigma_all(task.safety, trace)
    t = sigma(task.target, trace)
    c = sigma_avg_set(task.comfort, trace, empty=1.0)
    F = pam_value(s, t, c)
    return AssessmentReport(F, s, t, c, categorize(F))


@dataclass(frozen=True)
class SuccessRates:
    S: float
    S_T: float
    S_T_C: float
    n: int
    comfort_cutoff: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.S, self.S_T, self.S_T_C


def aggregate(reports: Sequence[AssessmentReport],
              comfort_cutoff: float = DEFAULT_COMFORT_CUTOFF) -> SuccessRates:
    """Success rates for the incremental sets S, S+T and S+T+C."""
    if not reports:
        raise EmptyInput("no reports to aggregate")
    n = len(reports)
    s = sum(r.sat_safety for r in reports)
    st = sum(r.sat_safety and r.sat_target for r in reports)
    stc = sum(r.sat_safety and r.sat_target and r.comfort_avg >= comfort_cutoff for r in reports)
    return SuccessRates(s / n, st / n, stc / n, n, comfort_cutoff)
