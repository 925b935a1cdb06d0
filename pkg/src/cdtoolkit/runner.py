"""Randomization-test training and experiment orchestration."""

import math
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

from . import __version__
from .data import build_dataset, corrupt_half, training_arrays
from .errors import ConfigurationError
from .measure import (
    bound_probability,
    confidence_dimension,
    correction_term,
    empirical_risk,
    estimate_p,
    estimate_p_sup_difference,
)
from .models import (
    CDMeasurement,
    CellResult,
    CellStatus,
    Dataset,
    DatasetPair,
    DatasetSpec,
    EpochRisk,
    EpochSummary,
    ExperimentConfig,
    ModelEntry,
    Network,
    NetworkSpec,
    OptimizerConfig,
    OptimizerEntry,
    OptimizerState,
    RepeatResult,
    RunRecord,
    TrainRun,
)
from .network import init_network, predict_labels, train_step
from .utils.logging import setup_logger
from .utils.seeding import derive_seed, digest, make_rng

logger = setup_logger(__name__)


class Cell(NamedTuple):
    """One (dataset, model, optimizer) combination of an experiment grid."""

    index: int
    dataset: DatasetSpec
    model: ModelEntry
    optimizer: OptimizerEntry

    @property
    def setting_id(self) -> str:
        """Models sharing a setting are ranked against each other."""
        return make_setting_id(self.dataset.id, self.optimizer.id)


def make_setting_id(dataset_id: str, optimizer_id: str) -> str:
    """Identifier of the (dataset, optimizer) setting."""
    return f"{dataset_id}/{optimizer_id}"


def expand_cells(cfg: ExperimentConfig) -> list[Cell]:
    """Enumerate the grid dataset-major, then optimizer, then model."""
    cells: list[Cell] = []
    for dataset in cfg.datasets:
        for optimizer in cfg.optimizers:
            for model in cfg.models:
                cells.append(Cell(len(cells), dataset, model, optimizer))
    return cells


def config_hash(cfg: ExperimentConfig) -> str:
    """Digest of the canonical config, independent of the worker count."""
    return digest(cfg.hashable_dump())


def train_on_pair(
    spec: NetworkSpec,
    pair: DatasetPair,
    opt: OptimizerConfig,
    epochs: int,
    batch_size: int,
    seed: int,
    model_id: str = "model",
    setting_id: str = "setting",
) -> tuple[Network, TrainRun]:
    """Train on both halves of a pair and record the risks after every epoch.

    Half one is trained on its incorrect labels and half two on its correct
    labels. Mini-batches are drawn from a fresh shuffle of the union every
    epoch.

    Args:
        spec: Network specification; its init_seed fixes the initial weights
        pair: Output of :func:`corrupt_half`
        opt: Optimizer configuration
        epochs: Number of passes over the data (>= 1)
        batch_size: Rows per optimizer step (>= 1)
        seed: Shuffling seed
        model_id: Model identifier stored in the run
        setting_id: Setting identifier stored in the run

    Returns:
        Trained network and the per-epoch risk trajectory

    Raises:
        ConfigurationError: If epochs or batch_size is not positive
        DivergenceError: If training produces non-finite values
    """
    if epochs < 1:
        raise ConfigurationError(f"epochs must be >= 1, got {epochs}")
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")

    features, targets = training_arrays(pair)
    net = init_network(spec)
    rng = make_rng(seed)
    state: OptimizerState | None = None
    risks: list[EpochRisk] = []

    for epoch in range(epochs):
        order = rng.permutation(targets.size)
        for batch_index, start in enumerate(range(0, order.size, batch_size)):
            rows = order[start : start + batch_size]
            net, state, _ = train_step(
                net,
                features[rows],
                targets[rows],
                opt,
                state,
                epoch=epoch,
                batch_index=batch_index,
            )
        risk = _epoch_risk(net, pair)
        risks.append(risk)
        logger.debug(
            f"{model_id} @ {setting_id} epoch {epoch}: v1={risk.v1:.4f} v2={risk.v2:.4f}"
        )

    final = risks[-1]
    run = TrainRun(
        epoch_risks=risks,
        final_err=(final.v1 + final.v2) / 2.0,
        m=pair.m,
        model_id=model_id,
        setting_id=setting_id,
        seed=seed,
    )
    return net, run


def _epoch_risk(net: Network, pair: DatasetPair) -> EpochRisk:
    return EpochRisk(
        v1=empirical_risk(predict_labels(net, pair.half_one.features), pair.half_one.labels),
        v2=empirical_risk(predict_labels(net, pair.half_two.features), pair.half_two.labels),
    )


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


class ExperimentRunner:
    """Runs every cell of an experiment and merges the results by cell index."""

    def __init__(self, workers: int = 1) -> None:
        """Initialize the runner.

        Args:
            workers: Maximum number of cells executed concurrently
        """
        if workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {workers}")
        self.workers = workers

    def run(self, cfg: ExperimentConfig, order: Sequence[int] | None = None) -> RunRecord:
        """Execute the full grid.

        Args:
            cfg: Experiment configuration
            order: Optional schedule, a permutation of the cell indices

        Returns:
            Run record with one CellResult per cell, in cell-index order

        Raises:
            ConfigurationError: If ``order`` is not a permutation of the cells
        """
        started = time.perf_counter()
        digest_ = config_hash(cfg)
        cells = expand_cells(cfg)
        schedule = self._schedule(cells, order)
        datasets = self._build_datasets(cfg)

        logger.info(
            f"Running '{cfg.name}' ({digest_[:12]}): {len(cells)} cells x {cfg.repeats} repeats "
            f"on {self.workers} worker(s)"
        )

        results: dict[int, CellResult] = {}
        if self.workers == 1:
            for cell in schedule:
                results[cell.index] = self._run_cell(cfg, cell, datasets, digest_)
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                futures = {
                    cell.index: pool.submit(self._run_cell, cfg, cell, datasets, digest_)
                    for cell in schedule
                }
                results = {index: future.result() for index, future in futures.items()}

        record = RunRecord(
            config=cfg,
            config_hash=digest_,
            version=__version__,
            cells=[results[i] for i in sorted(results)],
            duration_seconds=time.perf_counter() - started,
        )
        logger.info(
            f"Finished '{cfg.name}': {len(record.successful_cells())} ok, "
            f"{len(record.failed_cells())} failed in {record.duration_seconds:.1f}s"
        )
        return record

    @staticmethod
    def _schedule(cells: list[Cell], order: Sequence[int] | None) -> list[Cell]:
        if order is None:
            return cells
        if sorted(order) != list(range(len(cells))):
            raise ConfigurationError(
                f"order must be a permutation of 0..{len(cells) - 1}, got {list(order)}"
            )
        return [cells[i] for i in order]

    @staticmethod
    def _build_datasets(cfg: ExperimentConfig) -> dict[str, Dataset | Exception]:
        datasets: dict[str, Dataset | Exception] = {}
        for spec in cfg.datasets:
            try:
                datasets[spec.id] = build_dataset(spec)
            except Exception as e:
                logger.error(f"Failed to build dataset '{spec.id}': {e}")
                datasets[spec.id] = e
        return datasets

    def _run_cell(
        self,
        cfg: ExperimentConfig,
        cell: Cell,
        datasets: dict[str, Dataset | Exception],
        digest_: str,
    ) -> CellResult:
        started = time.perf_counter()
        label = f"cell {cell.index} ({cell.model.id} @ {cell.setting_id})"
        try:
            dataset = datasets[cell.dataset.id]
            if isinstance(dataset, Exception):
                raise dataset
            repeats = [
                self._run_repeat(cfg, cell, dataset, repeat) for repeat in range(cfg.repeats)
            ]
            result = self._aggregate(cfg, cell, repeats, digest_)
        except Exception as e:
            logger.warning(f"{label} failed: {e}")
            return CellResult(
                index=cell.index,
                dataset_id=cell.dataset.id,
                model_id=cell.model.id,
                optimizer_id=cell.optimizer.id,
                setting_id=cell.setting_id,
                status=CellStatus.FAILED,
                error=f"{type(e).__name__}: {e}",
                duration_seconds=time.perf_counter() - started,
            )

        result.duration_seconds = time.perf_counter() - started
        assert result.measurement is not None
        logger.info(f"{label}: p={result.measurement.p:.4f} CD={result.measurement.cd:.4f}")
        return result

    @staticmethod
    def _run_repeat(
        cfg: ExperimentConfig, cell: Cell, dataset: Dataset, repeat: int
    ) -> RepeatResult:
        started = time.perf_counter()
        data_seed = derive_seed(cfg.master_seed, "data", cell.dataset.id, repeat)
        seed = derive_seed(
            cfg.master_seed, "train", cell.dataset.id, cell.model.id, cell.optimizer.id, repeat
        )
        pair = corrupt_half(dataset, data_seed)
        spec = cell.model.network_spec(
            dataset.input_dim, dataset.class_count, derive_seed(seed, "init")
        )
        _, run = train_on_pair(
            spec,
            pair,
            cell.optimizer,
            cfg.epochs,
            cfg.batch_size,
            seed,
            model_id=cell.model.id,
            setting_id=cell.setting_id,
        )

        p = estimate_p(run)
        delta = correction_term(run.final_err, run.m, cfg.alpha)
        return RepeatResult(
            repeat=repeat,
            seed=seed,
            data_seed=data_seed,
            m=run.m,
            p=p,
            p_sup_difference=estimate_p_sup_difference(run),
            delta=delta,
            cd=confidence_dimension(p, delta),
            err=run.final_err,
            bound_prob=bound_probability(run.final_err),
            trajectory=[EpochSummary(v1=r.v1, v2=r.v2) for r in run.epoch_risks],
            duration_seconds=time.perf_counter() - started,
        )

    @staticmethod
    def _aggregate(
        cfg: ExperimentConfig, cell: Cell, repeats: list[RepeatResult], digest_: str
    ) -> CellResult:
        """Average p and Err over repeats; delta, CD and bound follow from the means."""
        p = min(1.0, max(0.0, _mean([r.p for r in repeats])))
        err = min(1.0, max(0.0, _mean([r.err for r in repeats])))
        m = repeats[0].m
        delta = correction_term(err, m, cfg.alpha)
        measurement = CDMeasurement(
            p=p,
            delta=delta,
            cd=confidence_dimension(p, delta),
            bound_prob=bound_probability(err),
            alpha=cfg.alpha,
            m=m,
            model_id=cell.model.id,
            setting_id=cell.setting_id,
            err=err,
            seed=repeats[0].seed,
            config_hash=digest_,
        )
        return CellResult(
            index=cell.index,
            dataset_id=cell.dataset.id,
            model_id=cell.model.id,
            optimizer_id=cell.optimizer.id,
            setting_id=cell.setting_id,
            m=m,
            measurement=measurement,
            repeats=repeats,
            p_min=min(r.p for r in repeats),
            p_max=max(r.p for r in repeats),
            cd_min=min(r.cd for r in repeats),
            cd_max=max(r.cd for r in repeats),
        )


def run_experiment(
    cfg: ExperimentConfig, workers: int | None = None, order: Sequence[int] | None = None
) -> RunRecord:
    """Run an experiment; ``workers`` falls back to the config, then to 1."""
    return ExperimentRunner(workers or cfg.workers or 1).run(cfg, order)
