"""Report and plot-data emission for run records."""

import csv
import io
import json
from typing import Any

from .models import CellResult, ConsistencyReport, RankMetric, ReportFormat, RunRecord
from .rank import consistency_report, rankings_from_record

SIZE_WIDTH = 5
ERR_WIDTH = 5
RANK_WIDTH = 9

CSV_COLUMNS = [
    "index",
    "dataset_id",
    "model_id",
    "optimizer_id",
    "setting_id",
    "m",
    "p",
    "delta",
    "cd",
    "err",
    "bound_prob",
    "alpha",
    "repeats",
    "p_min",
    "p_max",
    "cd_min",
    "cd_max",
    "p_sup_difference",
    "seed",
    "config_hash",
]


def _require_cells(record: RunRecord) -> list[CellResult]:
    cells = record.successful_cells()
    if not cells:
        raise ValueError(f"Record {record.record_id[:12]} has no successful cells to report")
    return cells


def record_consistency(record: RunRecord, metric: RankMetric) -> ConsistencyReport | str:
    """Consistency report of a record, or the reason none can be built."""
    try:
        return consistency_report(rankings_from_record(record, metric))
    except ValueError as e:
        return str(e)


def _csv_row(cell: CellResult) -> list[Any]:
    m = cell.measurement
    assert m is not None
    return [
        cell.index,
        cell.dataset_id,
        cell.model_id,
        cell.optimizer_id,
        cell.setting_id,
        m.m,
        repr(m.p),
        repr(m.delta),
        repr(m.cd),
        repr(m.err),
        repr(m.bound_prob),
        repr(m.alpha),
        len(cell.repeats),
        repr(cell.p_min),
        repr(cell.p_max),
        repr(cell.cd_min),
        repr(cell.cd_max),
        repr(sum(r.p_sup_difference for r in cell.repeats) / len(cell.repeats)),
        m.seed,
        m.config_hash,
    ]


def _emit_csv(record: RunRecord) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for cell in _require_cells(record):
        writer.writerow(_csv_row(cell))
    return buffer.getvalue()


def _emit_json(record: RunRecord) -> str:
    _require_cells(record)
    consistency: dict[str, Any] = {}
    for metric in RankMetric:
        result = record_consistency(record, metric)
        consistency[metric.value] = (
            result.model_dump(mode="json")
            if isinstance(result, ConsistencyReport)
            else {"error": result}
        )
    return json.dumps(
        {"record": record.model_dump(mode="json"), "consistency": consistency}, indent=2
    )


def _consistency_lines(record: RunRecord) -> list[str]:
    lines: list[str] = []
    for metric, label in ((RankMetric.P, "p"), (RankMetric.CD, "CD")):
        result = record_consistency(record, metric)
        if isinstance(result, str):
            lines.append(f"{label} consistency: unavailable ({result})")
            continue
        verdict = "consistent" if result.consistent else "inconsistent"
        lines.append(f"{label} consistency: min_tau = {result.min_tau:.4f} ({verdict})")
        spread = ", ".join(f"{model} {v:.1%}" for model, v in result.volatility.items())
        lines.append(f"{label} volatility: {spread}")
    return lines


def _setting_columns(size: str, err: str, p_text: str, cd_text: str) -> str:
    return (
        f"{size:>{SIZE_WIDTH}} {err:>{ERR_WIDTH}} "
        f"{p_text:<{RANK_WIDTH}} {cd_text:<{RANK_WIDTH}}"
    )


def _emit_table(record: RunRecord) -> str:
    """Models as rows; each setting contributes m, Err, p/Rank and CD/Rank columns."""
    cells = _require_cells(record)
    p_rankings = {r.setting_id: r for r in rankings_from_record(record, RankMetric.P)}
    cd_rankings = {r.setting_id: r for r in rankings_from_record(record, RankMetric.CD)}
    settings = list(cd_rankings)
    models = [m.id for m in record.config.models]
    by_key = {(c.setting_id, c.model_id): c for c in cells}

    def rank_text(setting: str, metric: RankMetric, model: str) -> str:
        ranking = (p_rankings if metric == RankMetric.P else cd_rankings)[setting]
        for entry in ranking.ordered:
            if entry.model_id == model:
                return f"{entry.value:.3f}/{entry.rank}"
        return "-"

    def setting_text(setting: str, model: str) -> str:
        cell = by_key.get((setting, model))
        if cell is None or cell.measurement is None:
            size, err = "-", "-"
        else:
            size, err = str(cell.measurement.m), f"{cell.measurement.err:.3f}"
        p_text = rank_text(setting, RankMetric.P, model)
        cd_text = rank_text(setting, RankMetric.CD, model)
        return _setting_columns(size, err, p_text, cd_text)

    model_width = max(5, *(len(m) for m in models))
    width = max(SIZE_WIDTH + ERR_WIDTH + 2 * RANK_WIDTH + 3, *(len(s) for s in settings))

    header = f"{'':<{model_width}}" + "".join(f" | {s:^{width}}" for s in settings)
    names = _setting_columns("m", "Err", "p/Rank", "CD/Rank")
    columns = f"{'Model':<{model_width}}" + "".join(f" | {names:<{width}}" for _ in settings)
    rule = "-" * len(columns)
    lines = [f"{record.config.name} ({record.record_id[:12]})", header, columns, rule]
    for model in models:
        row = f"{model:<{model_width}}"
        for setting in settings:
            row += f" | {setting_text(setting, model):<{width}}"
        lines.append(row.rstrip())
    lines.append(rule)

    failed = record.failed_cells()
    if failed:
        lines.append(f"failed cells: {', '.join(str(c.index) for c in failed)}")
    lines.extend(_consistency_lines(record))
    return "\n".join(lines) + "\n"


def emit_plot_data(record: RunRecord, metric: RankMetric = RankMetric.CD) -> str:
    """Plot-ready CSV: one row per setting, one column per model.

    Missing cells are left empty.
    """
    cells = _require_cells(record)
    models = [m.id for m in record.config.models]
    values: dict[str, dict[str, float]] = {}
    for cell in cells:
        assert cell.measurement is not None
        values.setdefault(cell.setting_id, {})[cell.model_id] = getattr(
            cell.measurement, metric.value
        )

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["setting", *models])
    for setting, row in values.items():
        writer.writerow([setting, *(repr(row[m]) if m in row else "" for m in models)])
    return buffer.getvalue()


def emit_report(record: RunRecord, fmt: ReportFormat | str) -> str:
    """Render a record as csv, json, table or plot data.

    Args:
        record: Run record with at least one successful cell
        fmt: Output format

    Returns:
        Report document

    Raises:
        ValueError: If the record has no successful cell or the format is unknown
    """
    fmt = ReportFormat(fmt)
    if fmt == ReportFormat.CSV:
        return _emit_csv(record)
    if fmt == ReportFormat.JSON:
        return _emit_json(record)
    if fmt == ReportFormat.PLOT:
        return emit_plot_data(record)
    return _emit_table(record)
