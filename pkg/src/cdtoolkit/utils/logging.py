"""Logging utilities for cdtoolkit."""

import logging
import sys
from pathlib import Path

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

_ROOT_NAME = "cdtoolkit"


def setup_logger(
    name: str, log_file: Path | None = None, level: int = logging.INFO
) -> logging.Logger:
    """Set up a logger with a console handler and an optional file handler.

    Console output goes to stderr so that reports printed on stdout stay
    machine-readable.

    Args:
        name: Logger name
        log_file: Optional file path for file logging
        level: Logging level

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Avoid adding duplicate handlers
    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(console_handler)
    logger.propagate = False

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(file_handler)

    return logger


def set_level(level: int | str) -> None:
    """Change the level of every toolkit logger and its handlers.

    Args:
        level: Logging level as an int or a name such as "DEBUG"
    """
    if isinstance(level, str):
        level = logging._nameToLevel[level.upper()]

    for name, candidate in logging.root.manager.loggerDict.items():
        if not name.startswith(_ROOT_NAME) or not isinstance(candidate, logging.Logger):
            continue
        candidate.setLevel(level)
        for handler in candidate.handlers:
            handler.setLevel(level)
