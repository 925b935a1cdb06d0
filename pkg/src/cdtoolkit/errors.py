"""Exception hierarchy for cdtoolkit."""

from pathlib import Path


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(ToolkitError, ValueError):
    """Invalid specification, parameter, or experiment configuration."""


class ConfigParseError(ConfigurationError):
    """An experiment config file could not be parsed or validated."""

    def __init__(
        self,
        path: Path,
        message: str,
        key: str | None = None,
        line: int | None = None,
    ) -> None:
        self.path = path
        self.key = key
        self.line = line
        location = str(path)
        if line is not None:
            location += f": line {line}"
        if key is not None:
            location += f": key '{key}'"
        super().__init__(f"{location}: {message}")


class ShapeError(ToolkitError, ValueError):
    """Array dimensions do not match what an operation expects."""


class DivergenceError(ToolkitError, ArithmeticError):
    """Training produced a non-finite loss or non-finite parameters."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None) -> None:
        self.epoch = epoch
        self.batch = batch
        where = []
        if epoch is not None:
            where.append(f"epoch {epoch}")
        if batch is not None:
            where.append(f"batch {batch}")
        suffix = f" at {', '.join(where)}" if where else ""
        super().__init__(f"{message}{suffix}")


class DataFormatError(ToolkitError, ValueError):
    """A dataset file is malformed."""

    def __init__(self, path: Path, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}")
