"""Experiment configuration loading and saving."""

import json
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .errors import ConfigParseError
from .models import ExperimentConfig
from .utils.logging import setup_logger
from .utils.validation import validate_config_path

logger = setup_logger(__name__)


def _element_start(text: str, pos: int, index: int) -> int:
    """Offset of element ``index`` of the first JSON array at or after ``pos``."""
    start = text.find("[", pos)
    if start < 0:
        return pos

    depth = 0
    element = 0
    in_string = escaped = False
    for i in range(start + 1, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if depth == 0 and element == index and not ch.isspace():
            return i
        if ch == '"':
            in_string = True
        elif ch in "[{":
            depth += 1
        elif ch in "]}":
            if depth == 0:
                break
            depth -= 1
        elif ch == "," and depth == 0:
            element += 1
    return pos


def locate_key(text: str, loc: tuple[int | str, ...]) -> int | None:
    """1-based line of the deepest part of a validation location found in ``text``.

    Object keys are matched as quoted strings; integer parts select array
    elements. Returns None when not even the first part can be found.
    """
    pos = 0
    found = False
    for part in loc:
        if isinstance(part, int):
            pos = _element_start(text, pos, part)
            continue
        index = text.find(json.dumps(part), pos)
        if index < 0:
            break
        pos = index
        found = True
    return text.count("\n", 0, pos) + 1 if found else None


def _dotted(loc: tuple[int | str, ...]) -> str | None:
    return ".".join(str(part) for part in loc) or None


class ConfigManager:
    """Reads and writes experiment configuration files."""

    def load(self, path: Path) -> ExperimentConfig:
        """Load and validate an experiment config file.

        Args:
            path: JSON config file

        Returns:
            Validated experiment configuration

        Raises:
            ConfigParseError: If the file is missing, is not valid JSON, or
                violates the schema; the error names the key and line
        """
        path = Path(path)
        is_valid, error = validate_config_path(path)
        if not is_valid:
            raise ConfigParseError(path, error or "unreadable")

        text = path.read_text(encoding="utf-8")
        config = self.loads(text, path)
        logger.info(f"Loaded experiment '{config.name}' from {path}")
        return config

    def loads(self, text: str, path: Path = Path("<string>")) -> ExperimentConfig:
        """Parse config text; ``path`` is only used in error messages."""
        try:
            data: Any = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigParseError(path, e.msg, line=e.lineno) from e

        if not isinstance(data, dict):
            raise ConfigParseError(path, "top level must be a JSON object", line=1)

        try:
            return ExperimentConfig.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            loc = tuple(first["loc"])
            extra = f" (+{e.error_count() - 1} more)" if e.error_count() > 1 else ""
            raise ConfigParseError(
                path,
                f"{first['msg']}{extra}",
                key=_dotted(loc),
                line=locate_key(text, loc),
            ) from e

    def save(self, config: ExperimentConfig, path: Path) -> None:
        """Write a config as indented JSON using an atomic rename.

        Args:
            config: Configuration to save
            path: Destination file
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        temp_file = path.with_suffix(".tmp")

        try:
            with open(temp_file, "w", encoding="utf-8") as f:
                json.dump(config.model_dump(mode="json", exclude_none=True), f, indent=2)
                f.write("\n")
            temp_file.replace(path)
        except Exception as e:
            if temp_file.exists():
                temp_file.unlink()
            raise RuntimeError(f"Failed to save configuration: {e}") from e

        logger.info(f"Saved experiment '{config.name}' to {path}")
