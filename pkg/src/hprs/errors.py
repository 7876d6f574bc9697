"""Exception hierarchy shared by every hprs module."""

from __future__ import annotations

from dataclasses import dataclass


class HPRSError(Exception):
    """Base class for all errors raised by hprs."""

    code = "HPRSError"


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    code: str
    message: str
    severity: str = "error"

    def format(self, filename: str = "<spec>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.code}: {self.message}"


class SpecError(HPRSError):
    """Raised when a requirements file cannot be turned into a draft."""

    code = "SpecError"

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0].format() if self.diagnostics else "invalid spec"
        more = len(self.diagnostics) - 1
        super().__init__(first + (f" (+{more} more)" if more > 0 else ""))

    def format(self, filename: str = "<spec>") -> str:
        return "\n".join(d.format(filename) for d in self.diagnostics)


class NonNormalizablePredicate(HPRSError, ValueError):
    code = "NonNormalizablePredicate"


# signal bounds


class BoundsError(HPRSError, ValueError):
    code = "BoundsError"


class TriviallySatisfied(BoundsError):
    code = "TriviallySatisfied"


class TriviallyViolated(BoundsError):
    code = "TriviallyViolated"


class UnboundedSignal(BoundsError):
    code = "UnboundedSignal"


# task validation


class TaskError(HPRSError, ValueError):
    code = "TaskError"


class EmptyTask(TaskError):
    code = "EmptyTask"


class NoTarget(TaskError):
    code = "NoTarget"


class MultipleTargets(TaskError):
    code = "MultipleTargets"


class UnknownRequirement(TaskError, KeyError):
    code = "UnknownRequirement"

    __str__ = Exception.__str__


# evaluation


class UnknownVariable(HPRSError, KeyError):
    code = "UnknownVariable"

    __str__ = Exception.__str__


class EmptyTrace(HPRSError, ValueError):
    code = "EmptyTrace"


class NotComfort(HPRSError, ValueError):
    code = "NotComfort"


class EmptyWindow(HPRSError, ValueError):
    code = "EmptyWindow"


class WeightDimensionMismatch(HPRSError, ValueError):
    code = "WeightDimensionMismatch"


class EmptyInput(HPRSError, ValueError):
    code = "EmptyInput"


# episodes, environments, solvers


class AlreadyTerminated(HPRSError, RuntimeError):
    code = "AlreadyTerminated"


class InvalidAction(HPRSError, ValueError):
    code = "InvalidAction"


class NonStochasticRow(HPRSError, ValueError):
    code = "NonStochasticRow"


class NonDiscreteEnvironment(HPRSError, TypeError):
    code = "NonDiscreteEnvironment"


class ConfigError(HPRSError, ValueError):
    code = "ConfigError"
