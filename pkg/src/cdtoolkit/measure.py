"""Risks, VC proxy p, correction term, Confidence Dimension and bound probabilities.

All functions are pure. Risks use the 0/1 reading of ``|y - f(x)|``: a sample
contributes 1 when the predicted class differs from the reference label.
"""

import math
from collections.abc import Sequence

import numpy as np

from .models import (
    CDMeasurement,
    PerformanceChange,
    TrainRun,
    VCScaleConfig,
    Verdict,
    is_unit_interval,
)

DEFAULT_ALPHA = 1.0
_MAX_EXPONENT = math.log(np.finfo(np.float64).max)


def _check_unit(name: str, value: float) -> None:
    if not is_unit_interval(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def empirical_risk(
    predicted: Sequence[int] | np.ndarray, reference: Sequence[int] | np.ndarray
) -> float:
    """Fraction of positions where ``predicted`` and ``reference`` disagree.

    Args:
        predicted: Predicted labels
        reference: Reference labels, same length

    Returns:
        Risk in [0, 1]

    Raises:
        ValueError: If the inputs are empty or differ in length
    """
    a = np.asarray(predicted)
    b = np.asarray(reference)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(
            f"Label sequences must be 1-D with equal length, got {a.shape} and {b.shape}"
        )
    if a.size == 0:
        raise ValueError("Label sequences must not be empty")
    return float(np.count_nonzero(a != b) / a.size)


def estimate_p(run: TrainRun) -> float:
    """VC proxy p: the smallest combined risk over the trajectory, halved.

    ``p = min_epoch (v1 + v2) / 2`` where v1 is the risk of half one against
    its incorrect labels and v2 the risk of half two against correct labels.
    Halving maps the sum from [0, 2] onto [0, 1].
    """
    return min((r.v1 + r.v2) / 2.0 for r in run.epoch_risks)


def estimate_p_sup_difference(run: TrainRun) -> float:
    """The supremum form of p: ``max_epoch (1 - v1) - v2``, in [-1, 1].

    ``1 - v1`` stands in for the risk of half one against its correct labels,
    which is exact for binary labels. Reported for comparison only; the
    Confidence Dimension uses :func:`estimate_p`.
    """
    return max((1.0 - r.v1) - r.v2 for r in run.epoch_risks)


def correction_term(err: float, m: int, alpha: float = DEFAULT_ALPHA) -> float:
    """Correction term ``delta = alpha * sqrt(ln(2 + err) / m)``.

    Args:
        err: Training error Err in [0, 1]
        m: Sample count (>= 1)
        alpha: Correction coefficient (>= 0)

    Returns:
        delta >= 0

    Raises:
        ValueError: If an argument is out of range
    """
    _check_unit("err", err)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return alpha * math.sqrt(math.log(2.0 + err) / m)


def confidence_dimension(p: float, delta: float) -> float:
    """``CD = min(1, p + delta)``.

    Raises:
        ValueError: If p is outside [0, 1] or delta is negative
    """
    _check_unit("p", p)
    if not (math.isfinite(delta) and delta >= 0):
        raise ValueError(f"delta must be >= 0, got {delta}")
    return min(1.0, p + delta)


def bound_probability(err: float) -> float:
    """Probability ``1 - (2 + err)^-4`` with which CD bounds generalization.

    Raises:
        ValueError: If err is outside [0, 1]
    """
    _check_unit("err", err)
    return 1.0 - (2.0 + err) ** -4


def hoeffding_probability(m: int, delta: float) -> float:
    """Two-sided Hoeffding floor ``1 - 2 exp(-2 m delta^2)`` for [0, 1] variables."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not (math.isfinite(delta) and delta >= 0):
        raise ValueError(f"delta must be >= 0, got {delta}")
    return 1.0 - 2.0 * math.exp(-2.0 * m * delta * delta)


def alpha_bound_probability(err: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Hoeffding floor with delta from :func:`correction_term`: ``1 - 2 / (2 + err)^(2 alpha^2)``.

    This does not coincide with :func:`bound_probability` in general; both are
    reported side by side.
    """
    _check_unit("err", err)
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return 1.0 - 2.0 / (2.0 + err) ** (2.0 * alpha * alpha)


def vc_scale(p: float, m: int, cfg: VCScaleConfig | None = None) -> float:
    """VC-dimension scale ``zeta * exp(m * eps^2 / 8) * p``.

    Args:
        p: VC proxy in [0, 1]
        m: Sample count (>= 1)
        cfg: Proportionality constants (defaults: zeta = 1, eps = 0)

    Returns:
        Scaled value

    Raises:
        ValueError: If p or m is out of range
        OverflowError: If the exponential is not representable
    """
    cfg = cfg or VCScaleConfig()
    _check_unit("p", p)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    exponent = m * cfg.eps * cfg.eps / 8.0
    if exponent > _MAX_EXPONENT:
        raise OverflowError(
            f"vc_scale exponent m*eps^2/8 = {exponent:.6g} exceeds the float64 range "
            f"(max {_MAX_EXPONENT:.6g})"
        )
    result = cfg.zeta * math.exp(exponent) * p
    if not math.isfinite(result):
        raise OverflowError(f"vc_scale result overflows float64 (zeta={cfg.zeta}, m={m})")
    return result


def performance_change_rate(
    ref_a: float, new_a: float, ref_b: float, new_b: float
) -> PerformanceChange:
    """Compare how a new configuration changes two tasks relative to a reference.

    ``rate_x = (new_x - ref_x) / ref_x``. The new configuration generalizes
    better when its task-B change exceeds its task-A change.

    Args:
        ref_a: Reference metric on task A (> 0)
        new_a: New metric on task A
        ref_b: Reference metric on task B (> 0)
        new_b: New metric on task B

    Returns:
        Rates and verdict

    Raises:
        ValueError: If a reference value is not positive
    """
    for name, value in (("ref_a", ref_a), ("ref_b", ref_b)):
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be > 0, got {value}")

    rate_a = (new_a - ref_a) / ref_a
    rate_b = (new_b - ref_b) / ref_b
    if math.isclose(rate_a, rate_b, rel_tol=0.0, abs_tol=1e-12):
        verdict = Verdict.TIE
    elif rate_b > rate_a:
        verdict = Verdict.NEW
    else:
        verdict = Verdict.REFERENCE
    return PerformanceChange(rate_a=rate_a, rate_b=rate_b, verdict=verdict)


def measure_run(
    run: TrainRun, alpha: float = DEFAULT_ALPHA, config_hash: str | None = None
) -> CDMeasurement:
    """Full measurement of one training run: p, delta, CD and bound probability."""
    p = estimate_p(run)
    delta = correction_term(run.final_err, run.m, alpha)
    return CDMeasurement(
        p=p,
        delta=delta,
        cd=confidence_dimension(p, delta),
        bound_prob=bound_probability(run.final_err),
        alpha=alpha,
        m=run.m,
        model_id=run.model_id,
        setting_id=run.setting_id,
        err=run.final_err,
        seed=run.seed,
        config_hash=config_hash,
    )
