"""Integration tests for the desk-scale ranking suites."""

from pathlib import Path

import pytest

from cdtoolkit.cli import cli
from cdtoolkit.config_manager import ConfigManager
from cdtoolkit.models import RankMetric, RunRecord
from cdtoolkit.rank import consistency_report, rankings_from_record
from cdtoolkit.runner import run_experiment

CONFIGS = Path(__file__).parents[2] / "configs"


@pytest.fixture(scope="module")
def toy_record() -> RunRecord:
    """Toy suite: three models on blobs and spirals at three sizes and two class counts."""
    config = ConfigManager().load(CONFIGS / "toy_suite.json")
    return run_experiment(config, workers=4)


@pytest.fixture(scope="module")
def optimizer_record() -> RunRecord:
    """Toy suite repeated under SGD, Adam and AdamW."""
    config = ConfigManager().load(CONFIGS / "optimizer_suite.json")
    return run_experiment(config, workers=4)


@pytest.mark.slow
class TestToySuite:
    """CD ranking consistency across set sizes and class counts."""

    def test_all_cells_succeed(self, toy_record: RunRecord):
        """Test the 12 x 3 grid completes."""
        assert len(toy_record.cells) == 36
        assert toy_record.failed_cells() == []

    def test_cd_ranking_consistent(self, toy_record: RunRecord):
        """Test every setting orders the models identically by CD."""
        report = consistency_report(rankings_from_record(toy_record, RankMetric.CD))

        assert report.min_tau == 1.0
        assert report.consistent

    def test_large_mlp_memorizes_more(self, toy_record: RunRecord):
        """Test the two-hidden-layer MLP has lower p than the linear model in every setting."""
        by_setting: dict[str, dict[str, float]] = {}
        for cell in toy_record.successful_cells():
            assert cell.measurement is not None
            by_setting.setdefault(cell.setting_id, {})[cell.model_id] = cell.measurement.p

        for setting, values in by_setting.items():
            assert values["mlp-64x64"] < values["linear"], setting

    def test_rank_command(self, toy_record: RunRecord, temp_dir: Path, capsys):
        """Test the rank command prints min_tau = 1 for the stored suite."""
        path = temp_dir / "toy.json"
        path.write_text(toy_record.model_dump_json(indent=2))

        assert cli(["--data-dir", str(temp_dir), "rank", str(path)]) == 0
        out = capsys.readouterr().out
        assert "min_tau = 1\n" in out
        assert out.splitlines()[-1] == "consistent"

    def test_permuted_schedule_reproduces_record(self, toy_record: RunRecord):
        """Test the suite rerun in reverse cell order gives identical canonical JSON."""
        order = list(reversed(range(len(toy_record.cells))))
        again = run_experiment(toy_record.config, workers=2, order=order)

        assert again.canonical_json() == toy_record.canonical_json()


@pytest.mark.slow
class TestOptimizerSuite:
    """CD ranking stability across optimizers."""

    def test_cd_ranking_consistent_across_optimizers(self, optimizer_record: RunRecord):
        """Test CD rankings agree for SGD, Adam and AdamW on every dataset."""
        rankings = rankings_from_record(optimizer_record, RankMetric.CD)

        assert len(rankings) == 36
        assert consistency_report(rankings).min_tau == 1.0
