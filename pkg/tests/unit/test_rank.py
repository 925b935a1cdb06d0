"""Tests for rankings, Kendall tau and volatility."""

import numpy as np
import pytest
from scipy import stats

from cdtoolkit.measure import bound_probability
from cdtoolkit.models import CDMeasurement, RankEntry, Ranking, RankMetric
from cdtoolkit.rank import (
    consistency_report,
    kendall_tau,
    rank_by_cd,
    rank_by_metric,
    rankings_by_setting,
    rankings_from_record,
    rankings_from_records,
    volatility,
)


# CIFAR-10 rows per class count: (model, training error, p, CD).
CIFAR10_ROWS = {
    2: [
        ("ReActNet", 0.512, 0.385, 0.598),
        ("PCNN", 0.371, 0.362, 0.582),
        ("ResNet-18", 0.034, 0.102, 0.413),
        ("MobileNetV2", 0.004, 0.022, 0.355),
    ],
    5: [
        ("ReActNet", 0.801, 0.573, 0.580),
        ("PCNN", 0.734, 0.583, 0.564),
        ("ResNet-18", 0.056, 0.163, 0.275),
        ("MobileNetV2", 0.001, 0.011, 0.229),
    ],
    7: [
        ("ReActNet", 0.785, 0.638, 0.698),
        ("PCNN", 0.876, 0.634, 0.696),
        ("ResNet-18", 0.124, 0.291, 0.437),
        ("MobileNetV2", 0.001, 0.010, 0.203),
    ],
    10: [
        ("ReActNet", 0.900, 0.669, 0.714),
        ("PCNN", 0.792, 0.669, 0.713),
        ("ResNet-18", 0.133, 0.300, 0.423),
        ("MobileNetV2", 0.001, 0.006, 0.272),
    ],
}
CIFAR10_ORDER = ["MobileNetV2", "ResNet-18", "PCNN", "ReActNet"]


def _fixed(model_id: str, setting_id: str, value: float, err: float) -> CDMeasurement:
    """Measurement whose p and CD both equal ``value``."""
    return CDMeasurement(
        p=value,
        delta=0.0,
        cd=value,
        bound_prob=bound_probability(err),
        alpha=1.0,
        m=1000,
        model_id=model_id,
        setting_id=setting_id,
        err=err,
    )


def _cifar10_rankings(metric: RankMetric) -> list[Ranking]:
    rankings: list[Ranking] = []
    for classes, rows in CIFAR10_ROWS.items():
        setting = f"cifar10-k{classes}"
        column = 2 if metric == RankMetric.P else 3
        measurements = [_fixed(row[0], setting, row[column], row[1]) for row in rows]
        rankings.append(rank_by_metric(measurements, setting, metric))
    return rankings


def _ranking(setting_id: str, order: list[str], metric: RankMetric = RankMetric.CD) -> Ranking:
    return Ranking(
        setting_id=setting_id,
        metric=metric,
        ordered=[
            RankEntry(model_id=model, value=0.1 * i, rank=i)
            for i, model in enumerate(order, start=1)
        ],
    )


class TestRankByMetric:
    """Tests for rank_by_metric and rank_by_cd."""

    def test_ascending_cd(self, make_measurement):
        """Test lower CD ranks first."""
        measurements = [
            make_measurement("big", "s", p=0.2),
            make_measurement("small", "s", p=0.6),
            make_measurement("mid", "s", p=0.4),
        ]
        ranking = rank_by_cd(measurements, "s")

        assert ranking.model_ids() == ["big", "mid", "small"]
        assert ranking.rank_of("small") == 3
        assert ranking.metric == RankMetric.CD

    def test_tie_broken_by_err_then_id(self, make_measurement):
        """Test equal values fall back to training error, then model ID."""
        measurements = [
            make_measurement("c", "s", p=0.3, err=0.5),
            make_measurement("b", "s", p=0.3, err=0.5),
            make_measurement("a", "s", p=0.3, err=0.6),
        ]
        ranking = rank_by_metric(measurements, "s", RankMetric.P)

        assert ranking.model_ids() == ["b", "c", "a"]

    def test_cifar10_two_class_cd(self):
        """Test the published two-class CDs rank MobileNetV2 first and ReActNet last."""
        setting = "cifar10-k2"
        measurements = [_fixed(m, setting, cd, err) for m, err, _, cd in CIFAR10_ROWS[2]]
        ranking = rank_by_cd(measurements, setting)

        assert ranking.model_ids() == CIFAR10_ORDER
        assert [ranking.rank_of(m) for m in CIFAR10_ORDER] == [1, 2, 3, 4]

    @pytest.mark.parametrize("shift", [0.01, 0.1, 0.25])
    def test_invariant_under_constant_shift(self, shift: float):
        """Test adding the same constant to every CD leaves the order unchanged."""
        for classes, rows in CIFAR10_ROWS.items():
            setting = f"cifar10-k{classes}"
            base = rank_by_cd([_fixed(m, setting, cd, err) for m, err, _, cd in rows], setting)
            shifted = rank_by_cd(
                [_fixed(m, setting, cd + shift, err) for m, err, _, cd in rows], setting
            )

            assert shifted.model_ids() == base.model_ids()

    def test_reranking_is_idempotent(self, make_measurement):
        """Test ranking a ranking's own entries reproduces it."""
        measurements = [
            make_measurement("a", "s", p=0.4, err=0.2),
            make_measurement("b", "s", p=0.1, err=0.6),
            make_measurement("c", "s", p=0.4, err=0.1),
            make_measurement("d", "s", p=0.7, err=0.3),
        ]
        ranking = rank_by_cd(measurements, "s")
        again = rank_by_cd([_fixed(e.model_id, "s", e.value, e.err) for e in ranking.ordered], "s")

        assert again == ranking
        assert sorted(e.rank for e in ranking.ordered) == [1, 2, 3, 4]

    def test_empty(self):
        """Test an empty setting is rejected."""
        with pytest.raises(ValueError, match="No measurements"):
            rank_by_cd([], "s")

    def test_foreign_setting(self, make_measurement):
        """Test measurements from another setting are rejected."""
        with pytest.raises(ValueError, match="other settings"):
            rank_by_cd([make_measurement("a", "other", p=0.1)], "s")

    def test_duplicate_model(self, make_measurement):
        """Test a model measured twice is rejected."""
        with pytest.raises(ValueError, match="Duplicate model IDs"):
            rank_by_cd([make_measurement("a", "s", p=0.1), make_measurement("a", "s", p=0.2)], "s")

    def test_grouped_by_setting(self, make_measurement):
        """Test rankings_by_setting keeps first-appearance order of settings."""
        measurements = [
            make_measurement("a", "s2", p=0.1),
            make_measurement("a", "s1", p=0.3),
            make_measurement("b", "s2", p=0.2),
            make_measurement("b", "s1", p=0.1),
        ]
        rankings = rankings_by_setting(measurements)

        assert [r.setting_id for r in rankings] == ["s2", "s1"]
        assert rankings[1].model_ids() == ["b", "a"]


class TestKendallTau:
    """Tests for kendall_tau."""

    def test_identical(self):
        """Test identical orders give 1."""
        assert kendall_tau(_ranking("x", ["a", "b", "c"]), _ranking("y", ["a", "b", "c"])) == 1.0

    def test_reversed(self):
        """Test reversed orders give -1."""
        assert kendall_tau(_ranking("x", ["a", "b", "c"]), _ranking("y", ["c", "b", "a"])) == -1.0

    def test_one_adjacent_swap_of_four(self):
        """Test one swapped pair among four models gives 2/3."""
        tau = kendall_tau(_ranking("x", ["a", "b", "c", "d"]), _ranking("y", ["a", "b", "d", "c"]))
        assert tau == pytest.approx(0.6667, abs=5e-5)

    def test_single_model(self):
        """Test a single model agrees trivially."""
        assert kendall_tau(_ranking("x", ["a"]), _ranking("y", ["a"])) == 1.0

    def test_matches_scipy(self):
        """Test agreement with scipy on random permutations of six models."""
        rng = np.random.default_rng(3)
        models = list("abcdef")
        for _ in range(20):
            a = [str(m) for m in rng.permutation(models)]
            b = [str(m) for m in rng.permutation(models)]
            expected, _ = stats.kendalltau(
                [a.index(m) for m in models], [b.index(m) for m in models]
            )
            assert kendall_tau(_ranking("x", a), _ranking("y", b)) == pytest.approx(expected)

    def test_different_models(self):
        """Test rankings over different models are rejected."""
        with pytest.raises(ValueError, match="different models"):
            kendall_tau(_ranking("x", ["a", "b"]), _ranking("y", ["a", "c"]))


class TestVolatility:
    """Tests for volatility."""

    def test_cd_spread(self):
        """Test CD from 0.418 to 0.752 moves about 44%."""
        assert volatility([0.418, 0.6, 0.752]) == pytest.approx(0.444, abs=5e-4)

    def test_p_spread(self):
        """Test p from 0.212 to 0.740 moves about 71%."""
        assert volatility([0.740, 0.212, 0.5]) == pytest.approx(0.7135, abs=5e-4)

    def test_all_zero(self):
        """Test zero values have zero volatility."""
        assert volatility([0.0, 0.0]) == 0.0

    def test_invalid(self):
        """Test empty or negative input is rejected."""
        with pytest.raises(ValueError, match="at least one"):
            volatility([])
        with pytest.raises(ValueError, match="non-negative"):
            volatility([0.1, -0.1])


class TestConsistencyReport:
    """Tests for consistency_report."""

    def test_consistent(self):
        """Test identical orders across settings are consistent."""
        report = consistency_report(
            [_ranking("s1", ["a", "b"]), _ranking("s2", ["a", "b"]), _ranking("s3", ["a", "b"])]
        )

        assert report.consistent
        assert report.min_tau == 1.0
        assert report.tau_matrix == [[1.0] * 3] * 3
        assert set(report.volatility) == {"a", "b"}

    def test_inconsistent(self):
        """Test one disagreeing setting drives min_tau down."""
        report = consistency_report(
            [_ranking("s1", ["a", "b", "c"]), _ranking("s2", ["a", "c", "b"])]
        )

        assert not report.consistent
        assert report.min_tau == pytest.approx(1 / 3)
        assert report.tau_matrix[0][1] == report.tau_matrix[1][0]

    def test_one_reversed_ranking(self):
        """Test a single exactly reversed setting gives min_tau = -1."""
        report = consistency_report(
            [
                _ranking("s1", ["a", "b", "c"]),
                _ranking("s2", ["a", "b", "c"]),
                _ranking("s3", ["c", "b", "a"]),
            ]
        )

        assert report.min_tau == -1.0
        assert report.tau_matrix[0][1] == 1.0
        assert not report.consistent

    def test_cifar10_class_counts(self):
        """Test published CDs agree across class counts while p ranks do not."""
        cd_report = consistency_report(_cifar10_rankings(RankMetric.CD))
        p_report = consistency_report(_cifar10_rankings(RankMetric.P))

        assert cd_report.consistent
        assert cd_report.min_tau == 1.0
        assert all(r.model_ids() == CIFAR10_ORDER for r in cd_report.rankings)
        assert not p_report.consistent
        assert p_report.min_tau < 1.0
        assert p_report.rankings[1].model_ids()[2:] == ["ReActNet", "PCNN"]

    def test_needs_two(self):
        """Test a single ranking is rejected."""
        with pytest.raises(ValueError, match="at least 2"):
            consistency_report([_ranking("s1", ["a"])])

    def test_mixed_metrics(self):
        """Test rankings of different metrics are rejected."""
        with pytest.raises(ValueError, match="different metrics"):
            consistency_report(
                [_ranking("s1", ["a"]), _ranking("s2", ["a"], metric=RankMetric.P)]
            )


class TestRecordRankings:
    """Tests for rankings built from run records."""

    def test_one_ranking_per_setting(self, tiny_record):
        """Test the tiny record yields a ranking per dataset/optimizer setting."""
        rankings = rankings_from_record(tiny_record)

        assert [r.setting_id for r in rankings] == ["blobs-a/adam", "spirals-a/adam"]
        assert all(sorted(r.model_ids()) == ["linear", "mlp"] for r in rankings)

    def test_several_records_prefixed(self, tiny_record):
        """Test settings from several records carry a config-hash prefix."""
        prefix = tiny_record.config_hash[:8]
        rankings = rankings_from_records([tiny_record, tiny_record], RankMetric.P)

        assert len(rankings) == 4
        assert rankings[0].setting_id == f"{prefix}:blobs-a/adam"
        assert all(r.metric == RankMetric.P for r in rankings)

    def test_single_record_unprefixed(self, tiny_record):
        """Test a single record keeps plain setting IDs."""
        assert rankings_from_records([tiny_record])[0].setting_id == "blobs-a/adam"
