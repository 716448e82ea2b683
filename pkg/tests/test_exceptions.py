"""
Unit tests for the exception hierarchy and the error handler.
"""

import logging

import pytest

from src.utils.error_handler import (
    EXIT_DATA_ERROR,
    EXIT_USAGE_ERROR,
    ErrorHandler,
    ErrorResult,
    ErrorSeverity,
    format_error_for_display,
)
from src.utils.exceptions import (
    ERROR_MESSAGES,
    AppException,
    BootstrapError,
    CalibrationError,
    ConfigurationError,
    DataError,
    ErrorCode,
    EstimationError,
    OptimizationError,
    SimulationError,
    UsageError,
)


class TestErrorCodes:
    """Tests for ErrorCode and the message templates."""

    def test_every_code_has_a_message(self) -> None:
        """Test each error code has a default message."""
        assert set(ERROR_MESSAGES) == set(ErrorCode)

    def test_codes_are_unique(self) -> None:
        """Test numeric values do not collide."""
        values = [code.value for code in ErrorCode]
        assert len(values) == len(set(values))

    def test_category_ranges(self) -> None:
        """Test codes are grouped by thousands."""
        assert ErrorCode.DATA_MISSING_COLUMN.value // 1000 == 1
        assert ErrorCode.OPTIMIZATION_TOO_FEW_EVENTS.value // 1000 == 3
        assert ErrorCode.CALIBRATION_BRACKET_FAILED.value // 1000 == 5


class TestAppException:
    """Tests for AppException base class."""

    def test_default_message(self) -> None:
        """Test default message from templates."""
        exc = AppException(code=ErrorCode.DATA_FILE_NOT_FOUND)
        assert "not found" in exc.message.lower()
        assert str(exc) == exc.message

    def test_exception_with_cause(self) -> None:
        """Test exception chaining."""
        original = FloatingPointError("overflow")
        exc = AppException(code=ErrorCode.INTERNAL_ERROR, cause=original)
        assert exc.cause is original

    def test_suggestions(self) -> None:
        """Test suggestions come from the recovery table."""
        assert AppException(code=ErrorCode.ESTIMATION_DEGENERATE_BANDWIDTH).suggestions
        assert AppException(code=ErrorCode.INTERNAL_ERROR).suggestions == []

    def test_to_dict(self) -> None:
        """Test serialization to dictionary."""
        exc = AppException(
            message="bad", code=ErrorCode.CONFIG_INVALID, details={"path": "x.yaml"}
        )
        data = exc.to_dict()
        assert data["code"] == 6002
        assert data["code_name"] == "CONFIG_INVALID"
        assert data["details"] == {"path": "x.yaml"}


class TestSpecializedExceptions:
    """Tests for the domain exception classes."""

    def test_data_error_line_prefix(self) -> None:
        """Test DataError prefixes the message with the file line."""
        exc = DataError("t0 must be positive", line=4)
        assert exc.message == "line 4: t0 must be positive"
        assert exc.details["line"] == 4
        assert exc.code == ErrorCode.DATA_INVALID_VALUE

    def test_data_error_without_message(self) -> None:
        """Test the template message is left alone when no message is given."""
        exc = DataError(code=ErrorCode.DATA_EMPTY, line=1)
        assert exc.message == ERROR_MESSAGES[ErrorCode.DATA_EMPTY]

    def test_optimization_error_details(self) -> None:
        """Test OptimizationError records the family and gradient norm."""
        exc = OptimizationError(family="lognormal", gradient_norm=0.02)
        assert exc.details == {"family": "lognormal", "gradient_norm": 0.02}

    def test_bootstrap_error_resamples(self) -> None:
        """Test BootstrapError records the resample count."""
        assert BootstrapError(resamples=200).details["resamples"] == 200

    def test_calibration_error_is_simulation_error(self) -> None:
        """Test CalibrationError carries the parameter and target."""
        exc = CalibrationError(parameter="alpha", target=0.5)
        assert isinstance(exc, SimulationError)
        assert exc.details == {"parameter": "alpha", "target": 0.5}
        assert exc.code == ErrorCode.CALIBRATION_BRACKET_FAILED

    def test_default_codes(self) -> None:
        """Test each subclass has its own default code."""
        assert EstimationError().code == ErrorCode.ESTIMATION_INVALID_ARGUMENT
        assert UsageError().code == ErrorCode.USAGE_ERROR
        assert ConfigurationError().code == ErrorCode.CONFIG_INVALID


class TestErrorHandler:
    """Tests for ErrorHandler class."""

    @pytest.mark.parametrize(
        ("exception", "exit_code"),
        [
            (UsageError("conflict"), EXIT_USAGE_ERROR),
            (ConfigurationError("bad yaml"), EXIT_USAGE_ERROR),
            (DataError("bad row", line=2), EXIT_DATA_ERROR),
            (EstimationError(), EXIT_DATA_ERROR),
            (OptimizationError(), EXIT_DATA_ERROR),
        ],
    )
    def test_exit_codes(self, exception: Exception, exit_code: int) -> None:
        """Test usage and configuration errors exit with 2, others with 1."""
        assert ErrorHandler().handle(exception).exit_code == exit_code

    def test_handle_app_exception(self) -> None:
        """Test handling AppException keeps code and details."""
        result = ErrorHandler().handle(DataError("bad row", line=7))
        assert result.success is False
        assert result.code == ErrorCode.DATA_INVALID_VALUE
        assert result.details["line"] == 7

    def test_unknown_exceptions(self) -> None:
        """Test standard exceptions are mapped to codes."""
        handler = ErrorHandler()
        assert handler.handle(ValueError("x")).code == ErrorCode.ESTIMATION_INVALID_ARGUMENT
        missing = handler.handle(FileNotFoundError("gone.csv"))
        assert missing.code == ErrorCode.DATA_FILE_NOT_FOUND
        assert "gone.csv" in missing.message
        other = handler.handle(RuntimeError("boom"))
        assert other.code == ErrorCode.UNKNOWN_ERROR
        assert other.severity == ErrorSeverity.CRITICAL
        assert other.exit_code == EXIT_DATA_ERROR

    def test_severity(self) -> None:
        """Test non-convergence is a warning and internal errors are critical."""
        handler = ErrorHandler()
        assert handler.handle(OptimizationError()).severity == ErrorSeverity.WARNING
        internal = AppException(code=ErrorCode.INTERNAL_ERROR)
        assert handler.handle(internal).severity == ErrorSeverity.CRITICAL

    def test_logs_code_name(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test the log record names the error code."""
        logger = logging.getLogger("test.errors")
        with caplog.at_level(logging.ERROR, logger="test.errors"):
            ErrorHandler(logger).handle(BootstrapError(resamples=10))
        assert "[BOOTSTRAP_ALL_UNDEFINED]" in caplog.text

    def test_to_dict(self) -> None:
        """Test the result serializes its exit code."""
        data = ErrorHandler().handle(UsageError()).to_dict()
        assert data["exit_code"] == EXIT_USAGE_ERROR
        assert data["code"] == ErrorCode.USAGE_ERROR.value


class TestErrorFormatting:
    """Tests for terminal formatting."""

    def test_format_for_display(self) -> None:
        """Test the message, code, details and suggestions are shown."""
        result = ErrorResult(
            success=False,
            message="line 3: time1 must be positive",
            code=ErrorCode.DATA_INVALID_VALUE,
            suggestions=["Remove or fix the row named in the message"],
            details={"line": 3},
        )
        output = format_error_for_display(result)
        assert output.startswith("Error: line 3")
        assert "DATA_INVALID_VALUE (1004)" in output
        assert "  line: 3" in output
        assert "  - Remove or fix" in output

    def test_format_without_code(self) -> None:
        """Test a bare result prints only the message."""
        assert format_error_for_display(ErrorResult(False, "oops")) == "Error: oops"
