"""
epblowup/errors.py
Exception hierarchy shared by the numeric core and the command-line front end.
"""
from typing import Any, Dict, Optional, Sequence


class EpBlowupError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 2


class ConfigError(EpBlowupError):
    """Run configuration could not be parsed or failed schema validation."""

    exit_code = 1

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class InvalidInputError(EpBlowupError, ValueError):
    exit_code = 1


class InvalidProfileError(InvalidInputError):
    pass


class OutOfHalfPlaneError(InvalidInputError):
    pass


class RegimeError(InvalidInputError):
    pass


class UnsupportedDimensionError(InvalidInputError):
    pass


class SingularInputError(InvalidInputError):
    pass


class NumericalError(EpBlowupError):
    exit_code = 2


class IntegrationFailure(NumericalError):
    """The ODE solver gave up; `t` and `state` hold the last accepted point."""

    def __init__(self, message: str, t: float, state: Sequence[float]):
        super().__init__(message)
        self.t = float(t)
        self.state = [float(v) for v in state]


class NotPeriodicError(NumericalError):
    pass


class LimitFailure(NumericalError):
    def __init__(self, message: str, estimates: Sequence[float] = ()):
        super().__init__(message)
        self.estimates = list(estimates)


class SpecialFunctionError(NumericalError):
    def __init__(self, message: str, params: Optional[Dict[str, Any]] = None):
        self.params = dict(params or {})
        if self.params:
            message = f"{message} {self.params}"
        super().__init__(message)


class ContinuationNeeded(SpecialFunctionError):
    pass


class SingularPathError(SpecialFunctionError):
    pass


class DegenerateCriterionError(NumericalError):
    pass


class SuiteFailure(EpBlowupError):
    exit_code = 3
