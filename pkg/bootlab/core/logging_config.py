"""
Centralized Logging Configuration
Console output goes to stderr so that reports on stdout stay machine-readable.
Module loggers are named Bootlab.<Area>.
"""

import logging
import logging.handlers
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

CONSOLE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(pathname)s:%(lineno)d - %(message)s"

# Third-party loggers that flood DEBUG output
QUIET_LOGGERS = ("numba",)


class ColoredFormatter(logging.Formatter):
    """Level names in ANSI colour for terminal output."""

    RESET = "\033[0m"
    COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
    }

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname)
        if color is None:
            return super().format(record)
        # Copy, so a file handler on the same record never sees escape codes
        tinted = logging.makeLogRecord(record.__dict__)
        tinted.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(tinted)


def _level(name: str) -> int:
    return getattr(logging, name.upper(), logging.INFO)


def log_file_path(log_dir: str) -> Path:
    """Daily log file inside log_dir."""
    return Path(log_dir) / f"bootlab_{datetime.now():%Y%m%d}.log"


def _console_handler(level: int, colored: bool) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    formatter_cls = ColoredFormatter if colored and sys.stderr.isatty() else logging.Formatter
    handler.setFormatter(formatter_cls(CONSOLE_FORMAT, datefmt="%H:%M:%S"))
    return handler


def _file_handler(level: int, log_dir: str) -> logging.Handler:
    Path(log_dir).mkdir(parents=True, exist_ok=True)
    handler = logging.handlers.RotatingFileHandler(
        log_file_path(log_dir), maxBytes=10 * 1024 * 1024, backupCount=5, encoding="utf-8"
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    return handler


def setup_logging(
    level: str = "INFO",
    log_to_file: bool = False,
    log_to_console: bool = True,
    colored_console: bool = True,
    log_dir: str = "logs",
) -> None:
    """
    Configure the root logger.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Also write to a rotating daily file under log_dir
        log_to_console: Write to stderr
        colored_console: Colour level names when stderr is a terminal
        log_dir: Directory for log files, created on demand
    """
    numeric_level = _level(level)
    root = logging.getLogger()
    root.setLevel(numeric_level)
    root.handlers.clear()

    if log_to_console:
        root.addHandler(_console_handler(numeric_level, colored_console))
    if log_to_file:
        root.addHandler(_file_handler(numeric_level, log_dir))

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    logger = logging.getLogger("Bootlab.Logging")
    logger.debug(f"Logging configured at {level.upper()} level")
    if log_to_file:
        logger.debug(f"Log file: {log_file_path(log_dir)}")


def get_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """Named logger, optionally with its own level."""
    logger = logging.getLogger(name)
    if level:
        logger.setLevel(_level(level))
    return logger
