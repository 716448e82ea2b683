"""Run logging: rich console on stderr, optional rotating text and JSON-lines files."""

import json
import logging
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.logging import RichHandler
from rich.theme import Theme

GMI_THEME = Theme(
    {
        "logging.level.debug": "dim cyan",
        "logging.level.info": "green",
        "logging.level.warning": "yellow",
        "logging.level.error": "red bold",
        "logging.level.critical": "red bold reverse",
        "log.time": "dim",
        "log.path": "dim",
    }
)

# stdout carries results only
console = Console(theme=GMI_THEME, stderr=True)

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
TEXT_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s:%(lineno)d | %(message)s"

_logging_initialized = False


class JSONFormatter(logging.Formatter):
    """One JSON object per record, with the structured context under ``context``."""

    def format(self, record: logging.LogRecord) -> str:
        entry: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "where": f"{record.module}.{record.funcName}:{record.lineno}",
        }
        context = getattr(record, "extra_data", None)
        if context:
            entry["context"] = context
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


class ContextLogger(logging.Logger):
    """Logger whose ``*_ctx`` methods attach a dict that the JSON file keeps."""

    def log_ctx(
        self,
        level: int,
        msg: str,
        *args: Any,
        ctx: dict[str, Any] | None = None,
        stacklevel: int = 2,
    ) -> None:
        if not self.isEnabledFor(level):
            return
        extra = {"extra_data": ctx} if ctx else None
        self._log(level, msg, args, extra=extra, stacklevel=stacklevel)

    def debug_ctx(self, msg: str, *args: Any, ctx: dict[str, Any] | None = None) -> None:
        self.log_ctx(logging.DEBUG, msg, *args, ctx=ctx, stacklevel=3)

    def info_ctx(self, msg: str, *args: Any, ctx: dict[str, Any] | None = None) -> None:
        self.log_ctx(logging.INFO, msg, *args, ctx=ctx, stacklevel=3)

    def warning_ctx(self, msg: str, *args: Any, ctx: dict[str, Any] | None = None) -> None:
        self.log_ctx(logging.WARNING, msg, *args, ctx=ctx, stacklevel=3)


logging.setLoggerClass(ContextLogger)


def verbosity_level(base: str, verbose: int) -> str:
    """Level after ``-v`` flags: each flag lowers the threshold one step, never below DEBUG."""
    base = base.upper()
    index = LEVELS.index(base) if base in LEVELS else LEVELS.index("WARNING")
    if verbose <= 0:
        return LEVELS[index]
    # -v always reaches at least INFO, -vv at least DEBUG
    target = min(index, LEVELS.index("INFO") - (verbose - 1))
    return LEVELS[max(target, 0)]


def _rotating_handler(
    path: Path | str,
    level: int,
    formatter: logging.Formatter,
    max_bytes: int,
    backup_count: int,
) -> RotatingFileHandler:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = RotatingFileHandler(
        path, maxBytes=max_bytes, backupCount=backup_count, encoding="utf-8"
    )
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def setup_logging(
    level: str = "WARNING",
    log_file: Path | str | None = None,
    json_file: Path | str | None = None,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 5,
) -> None:
    """Install the console handler and the optional file handlers on the root logger.

    Only the first call in a process takes effect.

    Args:
        level: Threshold name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Plain text log, rotated at ``max_bytes``
        json_file: JSON-lines log, rotated at ``max_bytes``
        max_bytes: Size at which a file is rotated
        backup_count: Rotated files kept per log
    """
    global _logging_initialized

    if _logging_initialized:
        return

    numeric_level = getattr(logging, level.upper(), logging.WARNING)

    root = logging.getLogger()
    root.setLevel(numeric_level)
    root.handlers.clear()

    rich_handler = RichHandler(
        console=console,
        show_time=True,
        show_level=True,
        show_path=False,
        rich_tracebacks=True,
        markup=False,
    )
    rich_handler.setLevel(numeric_level)
    rich_handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(rich_handler)

    if log_file:
        text = logging.Formatter(TEXT_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
        root.addHandler(
            _rotating_handler(log_file, numeric_level, text, max_bytes, backup_count)
        )
    if json_file:
        root.addHandler(
            _rotating_handler(json_file, numeric_level, JSONFormatter(), max_bytes, backup_count)
        )

    _logging_initialized = True


def get_logger(name: str) -> ContextLogger:
    """Module logger; an instance of ContextLogger."""
    return logging.getLogger(name)  # type: ignore[return-value]


def log_run(
    logger: logging.Logger,
    command: str,
    details: dict[str, Any] | None = None,
    result: str = "success",
    error: str | None = None,
) -> None:
    """Record one CLI command with its parameters and outcome.

    ``result`` is ``success`` (INFO), ``warning`` (WARNING) or anything else (ERROR).
    """
    msg = f"Command: {command} | Result: {result}"
    if error:
        msg += f" | Error: {error}"
    ctx = {"command": command, "details": details, "result": result, "error": error}

    level = {"success": logging.INFO, "warning": logging.WARNING}.get(result, logging.ERROR)
    if isinstance(logger, ContextLogger):
        logger.log_ctx(level, msg, ctx=ctx)
    else:
        logger.log(level, msg, extra={"extra_data": ctx})
