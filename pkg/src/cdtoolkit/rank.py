"""Per-setting rankings and cross-setting consistency."""

from collections.abc import Sequence
from fractions import Fraction
from itertools import combinations

from .models import CDMeasurement, ConsistencyReport, RankEntry, Ranking, RankMetric, RunRecord


def rank_by_metric(
    measurements: Sequence[CDMeasurement],
    setting_id: str,
    metric: RankMetric = RankMetric.CD,
) -> Ranking:
    """Order the models of one setting by ascending metric value.

    Ties are broken by lower training error, then by model ID.

    Args:
        measurements: Measurements of a single setting
        setting_id: Setting every measurement must belong to
        metric: Field to rank by

    Returns:
        Ranking with rank 1 for the lowest value

    Raises:
        ValueError: If the list is empty, mixes settings or repeats a model
    """
    if not measurements:
        raise ValueError(f"No measurements to rank for setting '{setting_id}'")
    foreign = sorted({m.setting_id for m in measurements if m.setting_id != setting_id})
    if foreign:
        raise ValueError(f"Measurements from other settings {foreign} in '{setting_id}'")
    ids = [m.model_id for m in measurements]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise ValueError(f"Duplicate model IDs {duplicates} in setting '{setting_id}'")

    field = metric.value
    ordered = sorted(measurements, key=lambda m: (getattr(m, field), m.err, m.model_id))
    return Ranking(
        setting_id=setting_id,
        metric=metric,
        ordered=[
            RankEntry(model_id=m.model_id, value=getattr(m, field), rank=i, err=m.err)
            for i, m in enumerate(ordered, start=1)
        ],
    )


def rank_by_cd(measurements: Sequence[CDMeasurement], setting_id: str) -> Ranking:
    """Rank models by Confidence Dimension; rank 1 generalizes best."""
    return rank_by_metric(measurements, setting_id, RankMetric.CD)


def rankings_by_setting(
    measurements: Sequence[CDMeasurement], metric: RankMetric = RankMetric.CD
) -> list[Ranking]:
    """One ranking per setting, settings in order of first appearance."""
    groups: dict[str, list[CDMeasurement]] = {}
    for m in measurements:
        groups.setdefault(m.setting_id, []).append(m)
    return [rank_by_metric(group, setting, metric) for setting, group in groups.items()]


def rankings_from_record(
    record: RunRecord, metric: RankMetric = RankMetric.CD, prefix: str = ""
) -> list[Ranking]:
    """Rankings of every setting in a record, skipping failed cells.

    ``prefix`` is prepended to every setting ID, which keeps settings apart
    when rankings from several records are compared.
    """
    measurements = [
        c.measurement.model_copy(update={"setting_id": prefix + c.measurement.setting_id})
        for c in record.successful_cells()
        if c.measurement is not None
    ]
    return rankings_by_setting(measurements, metric)


def kendall_tau(a: Ranking, b: Ranking) -> float:
    """Kendall's tau between two rankings of the same models.

    Computed exactly as ``(concordant - discordant) / (n (n - 1) / 2)``. A
    single-model ranking agrees trivially (tau = 1).

    Raises:
        ValueError: If the rankings cover different models
    """
    rank_a = {e.model_id: e.rank for e in a.ordered}
    rank_b = {e.model_id: e.rank for e in b.ordered}
    if rank_a.keys() != rank_b.keys():
        raise ValueError(
            f"Rankings '{a.setting_id}' and '{b.setting_id}' cover different models: "
            f"{sorted(rank_a)} vs {sorted(rank_b)}"
        )

    models = sorted(rank_a)
    pairs = len(models) * (len(models) - 1) // 2
    if pairs == 0:
        return 1.0

    score = 0
    for x, y in combinations(models, 2):
        agreement = (rank_a[x] - rank_a[y]) * (rank_b[x] - rank_b[y])
        score += 1 if agreement > 0 else -1
    return float(Fraction(score, pairs))


def volatility(values: Sequence[float]) -> float:
    """Relative spread ``(max - min) / max`` of a metric across settings.

    Raises:
        ValueError: If ``values`` is empty or contains negatives
    """
    if not values:
        raise ValueError("volatility needs at least one value")
    if min(values) < 0:
        raise ValueError("volatility needs non-negative values")
    top = max(values)
    return 0.0 if top == 0 else (top - min(values)) / top


def consistency_report(rankings: Sequence[Ranking]) -> ConsistencyReport:
    """Pairwise Kendall-tau matrix over rankings of the same models.

    Args:
        rankings: At least two rankings built from the same metric

    Returns:
        Report with the tau matrix, its minimum off-diagonal value, and the
        per-model volatility of the ranked metric

    Raises:
        ValueError: If fewer than two rankings are given, metrics are mixed,
            or model sets differ
    """
    if len(rankings) < 2:
        raise ValueError(f"consistency_report needs at least 2 rankings, got {len(rankings)}")
    metrics = {r.metric for r in rankings}
    if len(metrics) != 1:
        raise ValueError(f"Cannot compare rankings of different metrics {sorted(metrics)}")

    n = len(rankings)
    matrix = [[1.0] * n for _ in range(n)]
    for i, j in combinations(range(n), 2):
        tau = kendall_tau(rankings[i], rankings[j])
        matrix[i][j] = matrix[j][i] = tau
    min_tau = min(matrix[i][j] for i, j in combinations(range(n), 2))

    per_model: dict[str, list[float]] = {}
    for ranking in rankings:
        for entry in ranking.ordered:
            per_model.setdefault(entry.model_id, []).append(entry.value)

    return ConsistencyReport(
        metric=rankings[0].metric,
        rankings=list(rankings),
        tau_matrix=matrix,
        min_tau=min_tau,
        consistent=min_tau == 1.0,
        volatility={model: volatility(values) for model, values in sorted(per_model.items())},
    )


def rankings_from_records(
    records: Sequence[RunRecord], metric: RankMetric = RankMetric.CD
) -> list[Ranking]:
    """Rankings of one or more records.

    With several records each setting ID is prefixed with the first eight
    characters of its record's config hash.
    """
    if len(records) == 1:
        return rankings_from_record(records[0], metric)
    rankings: list[Ranking] = []
    for record in records:
        rankings.extend(rankings_from_record(record, metric, prefix=f"{record.config_hash[:8]}:"))
    return rankings
