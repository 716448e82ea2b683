"""
Centralized error handling for the GMI survival toolkit.

Maps exceptions to user-facing messages, log records and process exit codes.
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any

from src.utils.exceptions import (
    ERROR_MESSAGES,
    AppException,
    ConfigurationError,
    ErrorCode,
    UsageError,
)

EXIT_SUCCESS = 0
EXIT_DATA_ERROR = 1
EXIT_USAGE_ERROR = 2
EXIT_INTERRUPTED = 130


class ErrorSeverity(Enum):
    """Severity levels for errors."""

    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


@dataclass
class ErrorResult:
    """Result of error handling with user-friendly information."""

    success: bool
    message: str
    code: ErrorCode | None = None
    severity: ErrorSeverity = ErrorSeverity.ERROR
    suggestions: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)
    timestamp: datetime = field(default_factory=datetime.now)
    exit_code: int = EXIT_DATA_ERROR

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "success": self.success,
            "message": self.message,
            "code": self.code.value if self.code else None,
            "severity": self.severity.value,
            "suggestions": self.suggestions,
            "details": self.details,
            "timestamp": self.timestamp.isoformat(),
            "exit_code": self.exit_code,
        }


class ErrorHandler:
    """
    Centralized error handler for the command-line tools.

    Catches exceptions, logs appropriately, and returns user-friendly error information.
    """

    def __init__(self, logger: logging.Logger | None = None) -> None:
        self._logger = logger or logging.getLogger(__name__)

    def handle(self, exception: Exception) -> ErrorResult:
        """
        Handle an exception and return user-friendly error information.

        Args:
            exception: The exception to handle

        Returns:
            ErrorResult with user-friendly message, suggestions and exit code
        """
        if isinstance(exception, AppException):
            result = self._handle_app_exception(exception)
        else:
            result = self._handle_unknown_exception(exception)
        self._log_error(exception, result)
        return result

    def _handle_app_exception(self, exception: AppException) -> ErrorResult:
        """Handle application-specific exceptions."""
        return ErrorResult(
            success=False,
            message=exception.user_message,
            code=exception.code,
            severity=self._determine_severity(exception),
            suggestions=exception.suggestions,
            details=exception.details,
            exit_code=self._exit_code_for(exception),
        )

    def _handle_unknown_exception(self, exception: Exception) -> ErrorResult:
        """Handle unknown/unexpected exceptions."""
        code = self._map_exception_to_code(exception)
        message = ERROR_MESSAGES.get(code) or f"An error occurred: {exception}"
        if code is ErrorCode.DATA_FILE_NOT_FOUND:
            message = f"{message} ({exception})"

        return ErrorResult(
            success=False,
            message=message,
            code=code,
            severity=(
                ErrorSeverity.CRITICAL if code is ErrorCode.UNKNOWN_ERROR else ErrorSeverity.ERROR
            ),
            suggestions=["Check the logs for more details"],
            details={"exception_type": type(exception).__name__},
            exit_code=EXIT_DATA_ERROR,
        )

    def _map_exception_to_code(self, exception: Exception) -> ErrorCode:
        """Map standard Python exceptions to error codes."""
        mapping = {
            "FileNotFoundError": ErrorCode.DATA_FILE_NOT_FOUND,
            "ValueError": ErrorCode.ESTIMATION_INVALID_ARGUMENT,
            "FloatingPointError": ErrorCode.INTERNAL_ERROR,
            "MemoryError": ErrorCode.INTERNAL_ERROR,
        }
        return mapping.get(type(exception).__name__, ErrorCode.UNKNOWN_ERROR)

    def _determine_severity(self, exception: AppException) -> ErrorSeverity:
        """Determine the severity level of an exception."""
        warning_codes = {
            ErrorCode.OPTIMIZATION_NOT_CONVERGED,
            ErrorCode.CALIBRATION_NOT_CONVERGED,
        }
        if exception.code is ErrorCode.INTERNAL_ERROR:
            return ErrorSeverity.CRITICAL
        if exception.code in warning_codes:
            return ErrorSeverity.WARNING
        return ErrorSeverity.ERROR

    def _exit_code_for(self, exception: AppException) -> int:
        """Usage and configuration problems exit with 2, everything else with 1."""
        if isinstance(exception, (UsageError, ConfigurationError)):
            return EXIT_USAGE_ERROR
        return EXIT_DATA_ERROR

    def _log_error(self, exception: Exception, result: ErrorResult) -> None:
        """Log the error with appropriate level."""
        log_message = f"[{result.code.name if result.code else 'UNKNOWN'}] {result.message}"

        if result.severity == ErrorSeverity.CRITICAL:
            self._logger.critical(log_message, exc_info=exception)
        elif result.severity == ErrorSeverity.ERROR:
            self._logger.error(log_message)
        elif result.severity == ErrorSeverity.WARNING:
            self._logger.warning(log_message)
        else:
            self._logger.info(log_message)


def format_error_for_display(result: ErrorResult) -> str:
    """
    Format an error result for display on the terminal.

    Returns a multi-line string suitable for stderr.
    """
    lines = [f"Error: {result.message}"]

    if result.code:
        lines.append(f"Error Code: {result.code.name} ({result.code.value})")

    if result.details:
        for key, value in result.details.items():
            lines.append(f"  {key}: {value}")

    if result.suggestions:
        lines.append("")
        lines.append("Suggestions:")
        for suggestion in result.suggestions:
            lines.append(f"  - {suggestion}")

    return "\n".join(lines)
