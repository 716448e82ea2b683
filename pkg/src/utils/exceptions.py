"""
Custom exception hierarchy for the GMI survival toolkit.

Provides categorized exceptions with error codes, user-friendly messages,
and recovery suggestions.
"""

from enum import Enum
from typing import Any


class ErrorCode(Enum):
    """Error codes for categorizing exceptions."""

    # Data errors (1xxx)
    DATA_FILE_NOT_FOUND = 1001
    DATA_EMPTY = 1002
    DATA_MISSING_COLUMN = 1003
    DATA_INVALID_VALUE = 1004
    DATA_INVALID_STATUS = 1005
    DATA_COVARIATE_ARITY = 1006
    DATA_EXPORT_FAILED = 1007

    # Estimation errors (2xxx)
    ESTIMATION_DEGENERATE_BANDWIDTH = 2001
    ESTIMATION_INVALID_THRESHOLD = 2002
    ESTIMATION_COVARIATE_DIMENSION = 2003
    ESTIMATION_INSUFFICIENT_DATA = 2004
    ESTIMATION_INVALID_ARGUMENT = 2005

    # Parametric fitting errors (3xxx)
    OPTIMIZATION_ALL_CENSORED = 3001
    OPTIMIZATION_TOO_FEW_EVENTS = 3002
    OPTIMIZATION_NOT_CONVERGED = 3003

    # Bootstrap errors (4xxx)
    BOOTSTRAP_INVALID_RESAMPLES = 4001
    BOOTSTRAP_ALL_UNDEFINED = 4002

    # Simulation errors (5xxx)
    CALIBRATION_BRACKET_FAILED = 5001
    CALIBRATION_NOT_CONVERGED = 5002
    SIMULATION_FAILURE_THRESHOLD = 5003
    SIMULATION_INVALID_SCENARIO = 5004

    # Configuration errors (6xxx)
    CONFIG_NOT_FOUND = 6001
    CONFIG_INVALID = 6002

    # General errors (9xxx)
    USAGE_ERROR = 9001
    UNKNOWN_ERROR = 9002
    INTERNAL_ERROR = 9003


# User-friendly message templates
ERROR_MESSAGES: dict[ErrorCode, str] = {
    # Data
    ErrorCode.DATA_FILE_NOT_FOUND: "Data file not found. Please check the path and try again.",
    ErrorCode.DATA_EMPTY: "Data file contains no records.",
    ErrorCode.DATA_MISSING_COLUMN: "Data file is missing a required column.",
    ErrorCode.DATA_INVALID_VALUE: "Data file contains a missing or nonpositive time.",
    ErrorCode.DATA_INVALID_STATUS: "Data file contains an unknown status code (expected 0 or 1).",
    ErrorCode.DATA_COVARIATE_ARITY: "Records do not share the same covariate layout.",
    ErrorCode.DATA_EXPORT_FAILED: "Results could not be written.",

    # Estimation
    ErrorCode.ESTIMATION_DEGENERATE_BANDWIDTH: "Cannot choose a bandwidth: all prior event times are equal.",
    ErrorCode.ESTIMATION_INVALID_THRESHOLD: "Ratio thresholds must be finite and nonnegative.",
    ErrorCode.ESTIMATION_COVARIATE_DIMENSION: "At most two continuous covariates are supported.",
    ErrorCode.ESTIMATION_INSUFFICIENT_DATA: "Not enough subjects for this estimator.",
    ErrorCode.ESTIMATION_INVALID_ARGUMENT: "Invalid estimator argument.",

    # Parametric fitting
    ErrorCode.OPTIMIZATION_ALL_CENSORED: "All observations are censored; a parametric fit is not possible.",
    ErrorCode.OPTIMIZATION_TOO_FEW_EVENTS: "At least two events are required for a parametric fit.",
    ErrorCode.OPTIMIZATION_NOT_CONVERGED: "The parametric fit did not converge.",

    # Bootstrap
    ErrorCode.BOOTSTRAP_INVALID_RESAMPLES: "The number of bootstrap resamples must be at least 2.",
    ErrorCode.BOOTSTRAP_ALL_UNDEFINED: "Every bootstrap resample produced an undefined estimate.",

    # Simulation
    ErrorCode.CALIBRATION_BRACKET_FAILED: "Calibration target is outside the searchable parameter range.",
    ErrorCode.CALIBRATION_NOT_CONVERGED: "Calibration did not reach the requested tolerance.",
    ErrorCode.SIMULATION_FAILURE_THRESHOLD: "Too many simulation replicates failed.",
    ErrorCode.SIMULATION_INVALID_SCENARIO: "Simulation scenario is invalid.",

    # Configuration
    ErrorCode.CONFIG_NOT_FOUND: "Configuration file not found.",
    ErrorCode.CONFIG_INVALID: "Configuration file is invalid. Please check the format and try again.",

    # General
    ErrorCode.USAGE_ERROR: "Invalid command-line usage.",
    ErrorCode.UNKNOWN_ERROR: "An unexpected error occurred. Please check the logs for details.",
    ErrorCode.INTERNAL_ERROR: "An internal error occurred.",
}

# Recovery suggestions for each error code
RECOVERY_SUGGESTIONS: dict[ErrorCode, list[str]] = {
    ErrorCode.DATA_FILE_NOT_FOUND: [
        "Check the --data path",
        "Use an absolute path if running from another directory",
    ],
    ErrorCode.DATA_MISSING_COLUMN: [
        "The header must contain t0, time1 and status1 (or the names set under io: in settings)",
        "Covariate columns are detected by the z/v prefixes, e.g. z1, z2, v1",
    ],
    ErrorCode.DATA_INVALID_VALUE: [
        "All t0 and time1 values must be positive numbers",
        "Remove or fix the row named in the message",
    ],
    ErrorCode.DATA_INVALID_STATUS: [
        "Use 1 for an observed progression and 0 for a censored follow-up",
    ],
    ErrorCode.ESTIMATION_DEGENERATE_BANDWIDTH: [
        "Supply a fixed bandwidth with --bandwidth",
        "Check that t0 was read from the correct column",
    ],
    ErrorCode.ESTIMATION_COVARIATE_DIMENSION: [
        "Reduce the continuous covariates to at most two columns",
        "Summarise many covariates into a single score before estimation",
    ],
    ErrorCode.OPTIMIZATION_TOO_FEW_EVENTS: [
        "Use the nonparametric estimators for this dataset",
    ],
    ErrorCode.BOOTSTRAP_ALL_UNDEFINED: [
        "Increase the sample size or lower the threshold",
        "Check the data for extreme censoring",
    ],
    ErrorCode.CALIBRATION_BRACKET_FAILED: [
        "Check that the target lies strictly between 0 and 1",
        "Targets near the model's attainable limits cannot be calibrated",
    ],
    ErrorCode.SIMULATION_FAILURE_THRESHOLD: [
        "Inspect the log for the failing estimator",
        "Increase the sample size of the scenario",
    ],
    ErrorCode.CONFIG_INVALID: [
        "Compare the file against config/settings.yaml",
        "Check indentation and value types",
    ],
    ErrorCode.USAGE_ERROR: [
        "Run gmi <command> --help for the list of options",
    ],
}


class AppException(Exception):
    """Base exception for all application errors."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.UNKNOWN_ERROR,
        details: dict[str, Any] | None = None,
        cause: Exception | None = None,
    ) -> None:
        self.code = code
        self.details = details or {}
        self.cause = cause

        # Use provided message or default from templates
        self.message = message or ERROR_MESSAGES.get(code, "An error occurred")

        super().__init__(self.message)

    @property
    def user_message(self) -> str:
        """Get user-friendly error message."""
        return self.message

    @property
    def suggestions(self) -> list[str]:
        """Get recovery suggestions for this error."""
        return RECOVERY_SUGGESTIONS.get(self.code, [])

    @property
    def error_code(self) -> int:
        """Get numeric error code."""
        return self.code.value

    def to_dict(self) -> dict[str, Any]:
        """Convert exception to dictionary for serialization."""
        return {
            "code": self.code.value,
            "code_name": self.code.name,
            "message": self.message,
            "details": self.details,
            "suggestions": self.suggestions,
        }


class DataError(AppException):
    """Raised when input data cannot be parsed or violates record invariants."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.DATA_INVALID_VALUE,
        line: int | None = None,
        **kwargs: Any,
    ) -> None:
        details = kwargs.pop("details", {})
        if line is not None:
            details["line"] = line
            if message:
                message = f"line {line}: {message}"
        super().__init__(message=message, code=code, details=details, **kwargs)


class EstimationError(AppException):
    """Raised when an estimator cannot be evaluated on the given inputs."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.ESTIMATION_INVALID_ARGUMENT,
        **kwargs: Any,
    ) -> None:
        super().__init__(message=message, code=code, **kwargs)


class OptimizationError(AppException):
    """Raised when a censored maximum-likelihood fit fails."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.OPTIMIZATION_NOT_CONVERGED,
        family: str | None = None,
        gradient_norm: float | None = None,
        **kwargs: Any,
    ) -> None:
        details = kwargs.pop("details", {})
        if family:
            details["family"] = family
        if gradient_norm is not None:
            details["gradient_norm"] = gradient_norm
        super().__init__(message=message, code=code, details=details, **kwargs)


class BootstrapError(AppException):
    """Raised when bootstrap resampling cannot produce a standard error."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.BOOTSTRAP_ALL_UNDEFINED,
        resamples: int | None = None,
        **kwargs: Any,
    ) -> None:
        details = kwargs.pop("details", {})
        if resamples is not None:
            details["resamples"] = resamples
        super().__init__(message=message, code=code, details=details, **kwargs)


class SimulationError(AppException):
    """Raised when a simulation scenario cannot be run."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.SIMULATION_INVALID_SCENARIO,
        **kwargs: Any,
    ) -> None:
        super().__init__(message=message, code=code, **kwargs)


class CalibrationError(SimulationError):
    """Raised when Monte Carlo calibration of a model parameter fails."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.CALIBRATION_BRACKET_FAILED,
        parameter: str | None = None,
        target: float | None = None,
        **kwargs: Any,
    ) -> None:
        details = kwargs.pop("details", {})
        if parameter:
            details["parameter"] = parameter
        if target is not None:
            details["target"] = target
        super().__init__(message=message, code=code, details=details, **kwargs)


class ConfigurationError(AppException):
    """Raised when configuration is invalid or missing."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.CONFIG_INVALID,
        **kwargs: Any,
    ) -> None:
        super().__init__(message=message, code=code, **kwargs)


class UsageError(AppException):
    """Raised when command-line options conflict or are missing."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.USAGE_ERROR,
        **kwargs: Any,
    ) -> None:
        super().__init__(message=message, code=code, **kwargs)


class ExportError(AppException):
    """Raised when results cannot be written to disk."""

    def __init__(
        self,
        message: str | None = None,
        code: ErrorCode = ErrorCode.DATA_EXPORT_FAILED,
        **kwargs: Any,
    ) -> None:
        super().__init__(message=message, code=code, **kwargs)
