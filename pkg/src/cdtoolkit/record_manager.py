"""Persistence of run records."""

import json
import threading
from pathlib import Path

from .models import RunRecord, ToolkitSettings
from .utils.logging import setup_logger

logger = setup_logger(__name__)


class RecordManager:
    """Stores RunRecords as JSON files named by config hash."""

    def __init__(self, settings: ToolkitSettings) -> None:
        """Initialize the record manager.

        Args:
            settings: Toolkit settings
        """
        self.settings = settings
        self.records_dir = settings.records_dir
        self.records_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path_for(self, record_id: str) -> Path:
        """File that holds a record."""
        return self.records_dir / f"{record_id}.json"

    def save(self, record: RunRecord, path: Path | None = None) -> Path:
        """Persist a record; an existing record with the same hash is replaced.

        Args:
            record: Record to save
            path: Explicit destination (defaults to the records directory)

        Returns:
            Path written
        """
        target = Path(path) if path is not None else self.path_for(record.record_id)
        target.parent.mkdir(parents=True, exist_ok=True)
        temp_file = target.with_suffix(".tmp")

        with self._lock:
            try:
                with open(temp_file, "w", encoding="utf-8") as f:
                    f.write(record.model_dump_json(indent=2))
                    f.write("\n")
                temp_file.replace(target)
            except Exception as e:
                if temp_file.exists():
                    temp_file.unlink()
                raise RuntimeError(f"Failed to save record: {e}") from e

        logger.info(f"Saved record {record.record_id[:12]} to {target}")
        return target

    def load(self, record_id_or_path: str | Path) -> RunRecord:
        """Load a record by ID or by file path.

        Raises:
            KeyError: If no such record exists
            ValueError: If the file is not a valid record
        """
        candidate = Path(record_id_or_path)
        record_file = candidate if candidate.suffix == ".json" else self.path_for(str(candidate))
        if not record_file.exists():
            raise KeyError(f"Record '{record_id_or_path}' not found")

        try:
            return RunRecord.model_validate_json(record_file.read_text(encoding="utf-8"))
        except ValueError as e:
            logger.error(f"Failed to load record {record_file}: {e}")
            raise ValueError(f"Invalid record file {record_file}: {e}") from e

    def list_records(self) -> list[dict[str, str | int]]:
        """Summaries of all stored records, newest first."""
        summaries: list[dict[str, str | int]] = []
        for record_file in self.records_dir.glob("*.json"):
            try:
                data = json.loads(record_file.read_text(encoding="utf-8"))
                summaries.append(
                    {
                        "record_id": data["config_hash"],
                        "name": data["config"]["name"],
                        "created_at": data["created_at"],
                        "cells": len(data["cells"]),
                        "failed": sum(1 for c in data["cells"] if c["status"] == "failed"),
                    }
                )
            except Exception as e:
                logger.warning(f"Skipping unreadable record {record_file}: {e}")

        summaries.sort(key=lambda s: str(s["created_at"]), reverse=True)
        return summaries

    def delete(self, record_id: str) -> None:
        """Delete a stored record.

        Raises:
            KeyError: If no such record exists
        """
        record_file = self.path_for(record_id)
        with self._lock:
            if not record_file.exists():
                raise KeyError(f"Record '{record_id}' not found")
            record_file.unlink()
        logger.info(f"Deleted record {record_id}")
