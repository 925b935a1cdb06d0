"""Pytest configuration and fixtures."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from cdtoolkit.config_manager import ConfigManager
from cdtoolkit.data import corrupt_half, make_blobs
from cdtoolkit.measure import bound_probability, confidence_dimension, correction_term
from cdtoolkit.models import (
    CDMeasurement,
    Dataset,
    DatasetPair,
    ExperimentConfig,
    ToolkitSettings,
)
from cdtoolkit.record_manager import RecordManager
from cdtoolkit.runner import run_experiment


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def settings(temp_dir: Path) -> ToolkitSettings:
    """Create test toolkit settings rooted in a temporary directory."""
    toolkit_settings = ToolkitSettings(data_dir=temp_dir, workers=1)
    toolkit_settings.ensure_directories()
    return toolkit_settings


@pytest.fixture
def config_manager() -> ConfigManager:
    """Create a configuration manager for testing."""
    return ConfigManager()


@pytest.fixture
def record_manager(settings: ToolkitSettings) -> RecordManager:
    """Create a record manager for testing."""
    return RecordManager(settings)


@pytest.fixture
def blobs() -> Dataset:
    """Small two-class blob dataset."""
    return make_blobs(class_count=2, per_class=40, spread=0.2, seed=7)


@pytest.fixture
def blob_pair(blobs: Dataset) -> DatasetPair:
    """Corrupted split of the blob dataset."""
    return corrupt_half(blobs, seed=11)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config_data() -> dict:
    """A fast two-model, two-dataset experiment as raw config data."""
    return {
        "name": "tiny",
        "master_seed": 5,
        "epochs": 4,
        "batch_size": 16,
        "repeats": 2,
        "datasets": [
            {"id": "blobs-a", "kind": "blobs", "class_count": 2, "per_class": 20},
            {"id": "spirals-a", "kind": "spirals", "class_count": 2, "per_class": 20},
        ],
        "models": [
            {"id": "linear", "hidden": []},
            {"id": "mlp", "hidden": [8]},
        ],
        "optimizers": [{"id": "adam", "kind": "adam", "learning_rate": 0.01}],
    }


@pytest.fixture
def tiny_config(tiny_config_data: dict) -> ExperimentConfig:
    """Validated tiny experiment."""
    return ExperimentConfig.model_validate(tiny_config_data)


@pytest.fixture
def tiny_record(tiny_config: ExperimentConfig):
    """Run record of the tiny experiment."""
    return run_experiment(tiny_config, workers=1)


def _measurement(
    model_id: str, setting_id: str, p: float, err: float = 0.5, m: int = 1000
) -> CDMeasurement:
    delta = correction_term(err, m)
    return CDMeasurement(
        p=p,
        delta=delta,
        cd=confidence_dimension(p, delta),
        bound_prob=bound_probability(err),
        alpha=1.0,
        m=m,
        model_id=model_id,
        setting_id=setting_id,
        err=err,
    )


@pytest.fixture
def make_measurement():
    """Factory for measurements whose derived fields follow from p, err and m."""
    return _measurement
