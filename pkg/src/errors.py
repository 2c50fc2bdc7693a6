from typing import Optional


class DegDiffError(Exception):
    """Root of all errors raised by degdiff."""

    code = "degdiff_error"
    exit_status = 1

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self)}


class DomainError(DegDiffError, ValueError):
    """A parameter or input lies outside the domain where an operation is defined."""

    code = "domain_error"
    exit_status = 2


class ConfigError(DegDiffError, ValueError):
    """
    The experiment configuration could not be parsed or validated.

    :param message: Human readable description.
    :param key: Dotted path of the offending key, if known.
    :param line: 1-based line of the offending key in the config file, if known.
    """

    code = "config_error"
    exit_status = 2

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        location = []
        if key is not None:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.key = key
        self.line = line

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload.update({"key": self.key, "line": self.line})
        return payload


class NumericalError(DegDiffError, RuntimeError):
    code = "numerical_error"
    exit_status = 3


class StepFailure(NumericalError):
    """A single implicit step did not produce an acceptable state. The caller halves dt and retries."""

    code = "step_failure"

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InsufficientDataError(DegDiffError, ValueError):
    code = "insufficient_data"
    exit_status = 3


class AcceptanceFailure(DegDiffError):
    code = "acceptance_failure"
    exit_status = 4
