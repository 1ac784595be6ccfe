"""Exception hierarchy for our-pd-approx.

Every failure raised by the library derives from PDApproxError so callers
(and the CLI error handlers) can catch the whole family at once.
"""

from __future__ import annotations


class PDApproxError(Exception):
    """Base class for all library errors."""


class ValidationError(PDApproxError):
    """An invariant or precondition of a domain object was violated."""

    def __init__(self, message: str, field: str | None = None) -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ParseError(ValidationError):
    """An input artifact could not be parsed."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message, field=field)


class LengthError(ValidationError):
    """A covariance sequence has too few lags for the requested window."""

    def __init__(self, required_tau_max: int, available_tau_max: int) -> None:
        self.required_tau_max = required_tau_max
        self.available_tau_max = available_tau_max
        super().__init__(
            f"need covariance lags up to tau_max={required_tau_max}, have tau_max={available_tau_max}",
            field="tau_max",
        )


class DimensionError(PDApproxError):
    """Operand shapes do not match."""


class AccuracyError(PDApproxError):
    """A numerical procedure did not reach its tolerance."""

    def __init__(self, message: str, residual: float) -> None:
        self.residual = residual
        super().__init__(f"{message} (achieved residual {residual!r})")


class ConvergenceError(PDApproxError):
    """The eigensolver ran out of sweeps."""

    def __init__(self, sweeps: int, off_diagonal: float) -> None:
        self.sweeps = sweeps
        self.off_diagonal = off_diagonal
        super().__init__(f"Jacobi did not converge in {sweeps} sweeps (off-diagonal norm {off_diagonal!r})")


class RealizationError(PDApproxError):
    """A state-space realization could not be built."""


class DegenerateBasisError(RealizationError):
    """The window does not support n independent oscillations."""


class ConditioningError(RealizationError):
    """The shift operator is too ill-conditioned to project onto the orthogonal group."""


class ConfigError(PDApproxError):
    """An experiment configuration is inconsistent."""

    def __init__(self, message: str, path: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}")


class AcceptanceFailure(PDApproxError):
    """One or more acceptance criteria failed."""

    def __init__(self, failed: list[str]) -> None:
        self.failed = failed
        super().__init__(f"acceptance criteria failed: {', '.join(failed)}")
