"""Monte Carlo check of the two-sided Hoeffding inequality on bounded i.i.d. means.

Trial ``t`` of a cell draws its ``m`` values from a generator seeded with
``SeedSequence(seed, spawn_key=(t,))``. Samples therefore depend only on
(seed, trial, m, source): the same draws are reused for every delta, which
makes coverage non-decreasing in delta, and trials may run in any order.
"""

import csv
import io
import math
from collections.abc import Sequence

import numpy as np
from scipy import stats

from .errors import ConfigurationError
from .measure import hoeffding_probability
from .models import (
    ConcentrationExperiment,
    ConcentrationResult,
    ConcentrationSource,
    SourceKind,
)
from .utils.logging import setup_logger

logger = setup_logger(__name__)

CSV_HEADER = ["m", "delta", "source", "trials", "empirical", "floor", "slack", "stderr"]


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _draw(rng: np.random.Generator, source: ConcentrationSource, m: int) -> np.ndarray:
    if source.kind == SourceKind.BERNOULLI:
        return (rng.random(m) < source.p).astype(np.float64)
    if source.kind == SourceKind.UNIFORM01:
        return rng.random(m)
    return rng.beta(source.a, source.b, size=m)


def trial_means(m: int, trials: int, source: ConcentrationSource, seed: int) -> np.ndarray:
    """Sample mean of ``m`` draws for each of ``trials`` independent trials.

    Args:
        m: Draws per trial
        trials: Number of trials
        source: Bounded source
        seed: Root seed

    Returns:
        Array of ``trials`` sample means
    """
    means = np.empty(trials, dtype=np.float64)
    for trial in range(trials):
        means[trial] = _draw(_trial_rng(seed, trial), source, m).mean()
    return means


def _result_from_means(
    means: np.ndarray, m: int, delta: float, source: ConcentrationSource
) -> ConcentrationResult:
    trials = means.size
    hits = int(np.count_nonzero(np.abs(means - source.mean) <= delta))
    coverage = hits / trials
    floor = hoeffding_probability(m, delta)
    return ConcentrationResult(
        m=m,
        delta=delta,
        source=source.label,
        trials=trials,
        empirical_coverage=coverage,
        theoretical_floor=floor,
        slack=coverage - floor,
        stderr=math.sqrt(coverage * (1.0 - coverage) / trials),
    )


def run_concentration(exp: ConcentrationExperiment) -> ConcentrationResult:
    """Estimate ``P[|mean - E| <= delta]`` and compare with ``1 - 2 exp(-2 m delta^2)``.

    Args:
        exp: Experiment cell

    Returns:
        Coverage, floor, slack and binomial standard error
    """
    means = trial_means(exp.m, exp.trials, exp.source, exp.seed)
    result = _result_from_means(means, exp.m, exp.delta, exp.source)
    logger.debug(
        f"m={exp.m} delta={exp.delta} {exp.source.label}: "
        f"coverage {result.empirical_coverage:.5f} floor {result.theoretical_floor:.5f}"
    )
    return result


def sweep_concentration(
    m_grid: Sequence[int],
    delta_grid: Sequence[float],
    source: ConcentrationSource,
    trials: int,
    seed: int,
) -> list[ConcentrationResult]:
    """Run one cell per (m, delta), m-major in grid order.

    Sample means are computed once per m and shared by every delta.

    Args:
        m_grid: Batch counts (each >= 8)
        delta_grid: Deviation thresholds (each in (0, 1))
        source: Bounded source
        trials: Trials per cell
        seed: Root seed

    Returns:
        ``len(m_grid) * len(delta_grid)`` results

    Raises:
        ConfigurationError: If a grid is empty or a cell is invalid
    """
    if not m_grid or not delta_grid:
        raise ConfigurationError("sweep_concentration needs non-empty m and delta grids")

    results: list[ConcentrationResult] = []
    for m in m_grid:
        try:
            cells = [
                ConcentrationExperiment(m=m, trials=trials, delta=d, source=source, seed=seed)
                for d in delta_grid
            ]
        except ValueError as e:
            raise ConfigurationError(f"Invalid concentration cell for m={m}: {e}") from e

        means = trial_means(m, trials, source, seed)
        for cell in cells:
            results.append(_result_from_means(means, cell.m, cell.delta, source))
        logger.info(f"Swept m={m} over {len(delta_grid)} deltas ({source.label}, {trials} trials)")
    return results


def exact_bernoulli_coverage(m: int, delta: float, p: float) -> float:
    """Exact ``P[|S/m - p| <= delta]`` for ``S ~ Binomial(m, p)``."""
    s = np.arange(m + 1)
    inside = np.abs(s / m - p) <= delta
    return float(stats.binom.pmf(s[inside], m, p).sum())


def results_to_csv(results: Sequence[ConcentrationResult]) -> str:
    """CSV with header ``m,delta,source,trials,empirical,floor,slack,stderr``."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow(
            [
                r.m,
                repr(r.delta),
                r.source,
                r.trials,
                repr(r.empirical_coverage),
                repr(r.theoretical_floor),
                repr(r.slack),
                repr(r.stderr),
            ]
        )
    return buffer.getvalue()
