"""MCP server exposing the toolkit's measurements and reports."""

import json
from typing import Any

from fastmcp import FastMCP

from .bound_verify import exact_bernoulli_coverage, run_concentration
from .config_manager import ConfigManager
from .measure import (
    alpha_bound_probability,
    bound_probability,
    confidence_dimension,
    correction_term,
    performance_change_rate,
)
from .models import (
    ConcentrationExperiment,
    ConcentrationSource,
    RankMetric,
    ReportFormat,
    SourceKind,
    ToolkitSettings,
)
from .rank import consistency_report, rankings_from_records
from .record_manager import RecordManager
from .report import emit_report
from .runner import run_experiment
from .utils.logging import setup_logger

logger = setup_logger(__name__)

# Initialize server
mcp = FastMCP("cdtoolkit")

# Global managers (initialized in initialize_managers)
config_manager: ConfigManager
record_manager: RecordManager
settings: ToolkitSettings


def initialize_managers(toolkit_settings: ToolkitSettings | None = None) -> None:
    """Initialize all managers.

    Args:
        toolkit_settings: Settings to use (defaults to environment settings)
    """
    global config_manager, record_manager, settings

    settings = toolkit_settings or ToolkitSettings()
    settings.ensure_directories()
    config_manager = ConfigManager()
    record_manager = RecordManager(settings)

    logger.info(f"cdtoolkit MCP server initialized with data dir {settings.data_dir}")


# Record tools


@mcp.tool()
def list_records() -> list[dict[str, Any]]:
    """List stored run records, newest first.

    Returns:
        Record summaries with ID, experiment name, creation time and cell counts
    """
    return list(record_manager.list_records())


@mcp.tool()
def run_measurement(config: dict[str, Any], seed: int | None = None) -> dict[str, Any]:
    """Run an experiment grid and store the resulting record.

    Args:
        config: Experiment configuration with datasets, models, optimizers,
            epochs, batch_size, alpha, repeats and master_seed
        seed: Optional override of master_seed

    Returns:
        Record ID plus p, CD and status of every cell

    Examples:
        >>> run_measurement(
        ...     config={
        ...         "name": "toy",
        ...         "epochs": 50,
        ...         "datasets": [{"id": "blobs", "kind": "blobs", "per_class": 250}],
        ...         "models": [{"id": "linear"}, {"id": "mlp", "hidden": [64, 64]}],
        ...         "optimizers": [{"id": "adam", "kind": "adam"}]
        ...     }
        ... )
    """
    if seed is not None:
        config = {**config, "master_seed": seed}
    experiment = config_manager.loads(json.dumps(config, indent=2))
    record = run_experiment(experiment, workers=experiment.workers or settings.workers)
    record_manager.save(record)

    return {
        "record_id": record.record_id,
        "cells": [
            {
                "index": c.index,
                "setting_id": c.setting_id,
                "model_id": c.model_id,
                "status": c.status.value,
                "p": c.measurement.p if c.measurement else None,
                "cd": c.measurement.cd if c.measurement else None,
                "error": c.error,
            }
            for c in record.cells
        ],
    }


@mcp.tool()
def get_report(record_id: str, format: str = "table") -> str:
    """Render a stored record.

    Args:
        record_id: Record identifier (the config hash)
        format: One of csv, json, table, plot

    Returns:
        Report document
    """
    return emit_report(record_manager.load(record_id), ReportFormat(format))


@mcp.tool()
def rank_records(record_ids: list[str], metric: str = "cd") -> dict[str, Any]:
    """Kendall-tau consistency of the rankings stored in one or more records.

    Args:
        record_ids: Record identifiers
        metric: Rank by "cd" or "p"

    Returns:
        Consistency report with tau matrix, min_tau and per-model volatility
    """
    records = [record_manager.load(record_id) for record_id in record_ids]
    report = consistency_report(rankings_from_records(records, RankMetric(metric)))
    return report.model_dump(mode="json")


# Closed-form tools


@mcp.tool()
def verify_bound(
    m: int,
    delta: float,
    trials: int = 10_000,
    source: str = "bernoulli",
    p: float = 0.5,
    seed: int = 0,
) -> dict[str, Any]:
    """Monte Carlo coverage of the two-sided Hoeffding inequality for one cell.

    Args:
        m: Samples per trial (>= 8)
        delta: Deviation threshold in (0, 1)
        trials: Number of trials
        source: bernoulli, uniform01 or beta
        p: Bernoulli success probability
        seed: Root seed

    Returns:
        Empirical coverage, floor, slack, standard error, and the exact
        binomial coverage for Bernoulli sources
    """
    concentration_source = ConcentrationSource(kind=SourceKind(source), p=p)
    result = run_concentration(
        ConcentrationExperiment(
            m=m, trials=trials, delta=delta, source=concentration_source, seed=seed
        )
    )
    payload = result.model_dump()
    if concentration_source.kind == SourceKind.BERNOULLI:
        payload["exact_coverage"] = exact_bernoulli_coverage(m, delta, p)
    return payload


@mcp.tool()
def compute_confidence_dimension(
    p: float, err: float, m: int, alpha: float = 1.0
) -> dict[str, Any]:
    """Confidence Dimension from a VC proxy p, training error and sample count.

    Returns:
        delta, cd, bound_prob and the alpha-dependent Hoeffding probability
    """
    delta = correction_term(err, m, alpha)
    return {
        "p": p,
        "delta": delta,
        "cd": confidence_dimension(p, delta),
        "bound_prob": bound_probability(err),
        "alpha_bound_prob": alpha_bound_probability(err, alpha),
    }


@mcp.tool()
def compare_performance_change(
    ref_a: float, new_a: float, ref_b: float, new_b: float
) -> dict[str, Any]:
    """Compare a new configuration against a reference across two tasks.

    Returns:
        Relative changes on both tasks and the verdict (reference, new or tie)
    """
    return performance_change_rate(ref_a, new_a, ref_b, new_b).model_dump(mode="json")
