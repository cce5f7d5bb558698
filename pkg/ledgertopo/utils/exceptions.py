"""Exception hierarchy for ledger-topo.

Every error raised by the library derives from :class:`LedgerTopoError`, so
the CLI can render message, details and suggestions uniformly.
"""

from typing import Any, Optional


class LedgerTopoError(Exception):
    """Base exception for all ledger-topo errors."""

    def __init__(
        self,
        message: str,
        *,
        error_code: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
        suggestions: Optional[list[str]] = None,
    ):
        """Initialize the exception.

        Args:
            message: Human-readable error message
            error_code: Machine-readable error code for programmatic handling
            details: Additional error details as key-value pairs
            suggestions: List of suggestions to resolve the error
        """
        super().__init__(message)
        self.message = message
        self.error_code = error_code or self.__class__.__name__
        self.details = details or {}
        self.suggestions = suggestions or []

    def to_dict(self) -> dict[str, Any]:
        """Convert exception to dictionary for structured logging."""
        return {
            "error_type": self.__class__.__name__,
            "error_code": self.error_code,
            "message": self.message,
            "details": self.details,
            "suggestions": self.suggestions,
        }


# Configuration Errors
class ConfigurationError(LedgerTopoError):
    """Raised when there's a configuration problem."""

    pass


class InvalidConfigError(ConfigurationError):
    """Raised when configuration is invalid."""

    pass


# Validation Errors
class ValidationError(LedgerTopoError):
    """Base exception for validation errors."""

    pass


class InputValidationError(ValidationError):
    """Raised when an argument fails a precondition."""

    def __init__(
        self,
        message: str,
        *,
        field: Optional[str] = None,
        value: Any = None,
        expected_type: Optional[str] = None,
        **kwargs: Any,
    ):
        """Initialize input validation error.

        Args:
            message: Error message
            field: Field that failed validation
            value: Invalid value
            expected_type: Expected type or range
            **kwargs: Additional arguments for base class
        """
        super().__init__(message, **kwargs)
        self.field = field
        self.value = value
        self.expected_type = expected_type

        self.details.update(
            {
                "field": field,
                "value": str(value),
                "expected_type": expected_type,
            }
        )


# Ingest Errors
class IngestError(LedgerTopoError):
    """Base exception for reading ledger and series inputs."""

    pass


class RecordError(IngestError):
    """A single input line that could not be turned into a record."""

    def __init__(
        self,
        message: str,
        *,
        line_number: int,
        reason: str,
        **kwargs: Any,
    ):
        """Initialize record error.

        Args:
            message: Error message
            line_number: 1-based line number in the source stream
            reason: Short machine-readable reason (e.g. ``self_transfer``)
            **kwargs: Additional arguments for base class
        """
        super().__init__(message, **kwargs)
        self.line_number = line_number
        self.reason = reason
        self.details.update({"line_number": line_number, "reason": reason})


class ParseFailure(IngestError):
    """Raised in strict mode when any record error occurred."""

    def __init__(self, errors: list[RecordError], **kwargs: Any):
        """Initialize parse failure.

        Args:
            errors: Record errors collected while parsing
            **kwargs: Additional arguments for base class
        """
        first = errors[0]
        message = (
            f"{len(errors)} malformed record(s); first at line "
            f"{first.line_number}: {first.message}"
        )
        super().__init__(message, **kwargs)
        self.errors = errors
        self.details["lines"] = [e.line_number for e in errors]
        self.suggestions = ["Re-run without --strict to skip malformed lines"]


class WindowError(IngestError):
    """Raised when records cannot be placed into weekly windows."""

    pass


class MissingSeriesError(IngestError):
    """Raised when an auxiliary series lacks a required date or week."""

    pass


# Topology Errors
class TopologyError(LedgerTopoError):
    """Base exception for filtration and Betti computations."""

    pass


class DegenerateWeekError(TopologyError):
    """Raised when a week has no weights to build a filtration from."""

    pass


class SequenceMismatchError(TopologyError):
    """Raised when two sequences or censuses cannot be differenced."""

    pass


# Feature Errors
class FeatureError(LedgerTopoError):
    """Base exception for feature computation and assembly."""

    pass


class InsufficientHistoryError(FeatureError):
    """Raised when a feature needs more history than is available."""

    pass


class AlignmentError(FeatureError):
    """Raised when per-week features do not line up."""

    def __init__(self, missing: list[tuple[int, str]], **kwargs: Any):
        """Initialize alignment error.

        Args:
            missing: Sorted (week, feature) pairs that are undefined
            **kwargs: Additional arguments for base class
        """
        shown = ", ".join(f"(week {w}, {f})" for w, f in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        super().__init__(f"Missing feature values: {shown}{more}", **kwargs)
        self.missing = missing
        self.details["missing"] = [list(pair) for pair in missing]


# Model Errors
class ModelError(LedgerTopoError):
    """Base exception for forecaster errors."""

    pass


class WindowShapeError(ModelError):
    """Raised when an input window has the wrong length or width."""

    pass


class TrainingError(ModelError):
    """Raised when optimization diverges."""

    def __init__(
        self,
        message: str,
        *,
        learning_rate: Optional[float] = None,
        epoch: Optional[int] = None,
        **kwargs: Any,
    ):
        """Initialize training error.

        Args:
            message: Error message
            learning_rate: Learning rate in use when training failed
            epoch: Epoch at which the failure was detected
            **kwargs: Additional arguments for base class
        """
        super().__init__(message, **kwargs)
        self.learning_rate = learning_rate
        self.epoch = epoch
        self.details.update({"learning_rate": learning_rate, "epoch": epoch})
        if learning_rate is not None:
            self.suggestions.append(
                f"Lower learning_rate (currently {learning_rate:g}), e.g. to "
                f"{learning_rate / 10:g}"
            )
        self.suggestions.append("Check the feature matrix for extreme values")


class ModelFormatError(ModelError):
    """Raised when a model file cannot be read."""

    pass


# Statistics Errors
class StatisticsError(LedgerTopoError):
    """Base exception for evaluation statistics."""

    pass


class UndefinedStatisticError(StatisticsError):
    """Raised when a statistic is undefined for the given input."""

    pass


class EmptySelectionError(StatisticsError):
    """Raised when a week filter selects nothing."""

    pass


# Attribution Errors
class AttributionError(LedgerTopoError):
    """Raised when Shapley reports cannot be computed or aggregated."""

    pass
