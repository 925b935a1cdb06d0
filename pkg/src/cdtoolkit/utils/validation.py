"""Validation utilities for cdtoolkit."""

from pathlib import Path

import psutil


def validate_config_path(path: Path) -> tuple[bool, str | None]:
    """Validate that an experiment config file exists and is readable.

    Args:
        path: Path to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not path.exists():
        return False, f"Config file does not exist: {path}"

    if not path.is_file():
        return False, f"Config path is not a file: {path}"

    try:
        with open(path, encoding="utf-8") as f:
            f.read(1)
    except PermissionError:
        return False, f"Permission denied reading config file: {path}"
    except UnicodeDecodeError:
        return False, f"Config file is not UTF-8 text: {path}"

    return True, None


def validate_output_dir(path: Path) -> tuple[bool, str | None]:
    """Validate that reports or records can be written below a directory.

    A directory that does not exist yet is valid when its nearest existing
    parent is a directory.

    Args:
        path: Directory to validate

    Returns:
        Tuple of (is_valid, error_message)
    """
    probe = path
    while not probe.exists():
        if probe.parent == probe:
            return False, f"No existing parent for output directory: {path}"
        probe = probe.parent

    if not probe.is_dir():
        return False, f"Output path is not a directory: {probe}"

    return True, None


def validate_worker_count(workers: int) -> tuple[bool, str | None]:
    """Validate a worker count against the machine's logical CPUs.

    Args:
        workers: Requested number of concurrent cells

    Returns:
        Tuple of (is_valid, error_message)
    """
    if workers < 1:
        return False, f"Worker count must be >= 1, got {workers}"

    available = psutil.cpu_count(logical=True) or 1
    if workers > available:
        return False, f"Worker count {workers} exceeds the {available} available CPUs"

    return True, None
