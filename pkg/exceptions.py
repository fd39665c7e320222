"""Error types shared by the numerical packages, services and the CLI."""
from typing import Optional


class PopIdentError(Exception):
    """Base class for every error raised by this project."""

    exit_code = 1


class ConfigError(PopIdentError, ValueError):
    """Run configuration failed validation."""

    exit_code = 2

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class DatasetSchemaError(PopIdentError, ValueError):
    """A dataset file is missing a column or has malformed rows."""

    exit_code = 2

    def __init__(self, message: str, column: Optional[str] = None):
        self.column = column
        super().__init__(message)


class InputError(PopIdentError, ValueError):
    """A precondition on the inputs of an operation does not hold."""

    exit_code = 2


class DomainError(PopIdentError, ValueError):
    """Parameter or state outside the domain where a model is defined."""

    exit_code = 2


class IntegrationError(PopIdentError, RuntimeError):
    """The ODE solver could not produce a trajectory."""

    exit_code = 3

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        super().__init__(message)


class NonConvergenceError(IntegrationError):
    """Step size underflow or step budget exhausted."""


class ModelEvaluationError(IntegrationError):
    """The right-hand side returned non-finite values or rejected its input."""


class SimulationError(PopIdentError, RuntimeError):
    """Synthetic data generation failed for one individual."""

    exit_code = 3

    def __init__(self, individual_id: int, message: str):
        self.individual_id = individual_id
        super().__init__(f"individual {individual_id}: {message}")


class FitError(PopIdentError, RuntimeError):
    """An estimation run failed."""

    exit_code = 3


class AllStartsFailedError(FitError):
    """Every start of a multi-start run failed."""


class StorageError(PopIdentError):
    """An output directory or file could not be written or read."""

    exit_code = 1
