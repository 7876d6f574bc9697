"""Hierarchical potential-based reward shaping from formal task requirements."""

__version__ = "0.1.0"

from .assessment import AssessmentReport, Category, aggregate, pam
from .errors import HPRSError, SpecError
from .estimators import HPRSShaper, TabularQLearner
from .shaping import potential, shape_trace, shaped_reward
from .spec_lang import parse_spec
from .task import TaskSpec, load_task, task_from_text, validate
from .trace import Trace, load_trace, make_trace

__all__ = [
    "AssessmentReport", "Category", "HPRSError", "HPRSShaper", "SpecError", "TabularQLearner",
    "TaskSpec", "Trace", "aggregate", "load_task", "load_trace", "make_trace", "pam", "parse_spec",
    "potential", "shape_trace", "shaped_reward", "task_from_text", "validate", "__version__",
]
