"""Core data models for cdtoolkit."""

import math
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import psutil
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .utils.seeding import SEED_MASK, canonical_json

# Tolerance used when checking derived fields that were computed in float64.
_DERIVED_TOL = 1e-12


class Precision(str, Enum):
    """Network precision modes."""

    FULL = "full"
    BINARIZED = "binarized"


class Activation(str, Enum):
    """Hidden-layer activation functions."""

    RELU = "relu"
    TANH = "tanh"


class OptimizerKind(str, Enum):
    """Supported optimizers."""

    SGD = "sgd"
    ADAM = "adam"
    ADAMW = "adamw"


class DatasetKind(str, Enum):
    """Dataset sources an experiment can draw from."""

    BLOBS = "blobs"
    SPIRALS = "spirals"
    IDX = "idx"
    CSV = "csv"


class SourceKind(str, Enum):
    """Bounded distributions used by the concentration laboratory."""

    BERNOULLI = "bernoulli"
    UNIFORM01 = "uniform01"
    BETA = "beta"


class Verdict(str, Enum):
    """Outcome of a cross-task rate-of-change comparison."""

    REFERENCE = "reference"
    NEW = "new"
    TIE = "tie"


class RankMetric(str, Enum):
    """Measurement field a ranking is built from."""

    CD = "cd"
    P = "p"


class ReportFormat(str, Enum):
    """Report output formats."""

    CSV = "csv"
    JSON = "json"
    TABLE = "table"
    PLOT = "plot"


class CellStatus(str, Enum):
    """Outcome of one experiment cell."""

    OK = "ok"
    FAILED = "failed"


# ---------------------------------------------------------------------------
# Networks and optimizers
# ---------------------------------------------------------------------------


class NetworkSpec(BaseModel):
    """Layer topology and numerics of a feed-forward classifier."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    layer_sizes: list[int] = Field(description="Input dim, hidden widths, class count")
    precision: Precision = Precision.FULL
    activation: Activation = Activation.RELU
    init_seed: int = Field(default=0, ge=0, le=SEED_MASK)

    @field_validator("layer_sizes")
    @classmethod
    def validate_layer_sizes(cls, v: list[int]) -> list[int]:
        """Require at least an input and an output layer, all positive."""
        if len(v) < 2:
            raise ValueError(f"layer_sizes needs at least 2 entries, got {len(v)}")
        if any(size < 1 for size in v):
            raise ValueError(f"layer_sizes entries must be >= 1, got {v}")
        return v

    @property
    def input_dim(self) -> int:
        """Number of input features."""
        return self.layer_sizes[0]

    @property
    def class_count(self) -> int:
        """Number of output classes."""
        return self.layer_sizes[-1]


class Network(BaseModel):
    """A network specification together with its parameter arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @model_validator(mode="after")
    def validate_shapes(self) -> "Network":
        """Check parameter shapes against the layer sizes."""
        sizes = self.spec.layer_sizes
        expected = len(sizes) - 1
        if len(self.weights) != expected or len(self.biases) != expected:
            raise ValueError(
                f"Expected {expected} weight/bias arrays, "
                f"got {len(self.weights)}/{len(self.biases)}"
            )
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            if w.shape != (sizes[i], sizes[i + 1]):
                raise ValueError(
                    f"Weight {i} has shape {w.shape}, expected {(sizes[i], sizes[i + 1])}"
                )
            if b.shape != (sizes[i + 1],):
                raise ValueError(f"Bias {i} has shape {b.shape}, expected {(sizes[i + 1],)}")
        return self

    def parameters(self) -> list[np.ndarray]:
        """Parameters in update order: w0, b0, w1, b1, ..."""
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases, strict=True):
            params.extend([w, b])
        return params

    def is_finite(self) -> bool:
        """True when no parameter is NaN or infinite."""
        return all(bool(np.all(np.isfinite(p))) for p in self.parameters())


class OptimizerConfig(BaseModel):
    """Optimizer hyperparameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: OptimizerKind = OptimizerKind.SGD
    learning_rate: float = Field(default=0.01, gt=0, description="Step size")
    momentum: float = Field(default=0.0, ge=0, lt=1, description="SGD momentum")
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    weight_decay: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def validate_betas(self) -> "OptimizerConfig":
        """Adam-family optimizers need beta1 < beta2."""
        if self.kind in (OptimizerKind.ADAM, OptimizerKind.ADAMW) and not (
            self.beta1 < self.beta2
        ):
            raise ValueError(
                f"{self.kind.value} requires beta1 < beta2 < 1, "
                f"got beta1={self.beta1}, beta2={self.beta2}"
            )
        return self


class OptimizerState(BaseModel):
    """Per-parameter optimizer buffers and the step counter."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: OptimizerKind
    step: int = 0
    slots: dict[str, list[np.ndarray]] = Field(default_factory=dict)


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


class Dataset(BaseModel):
    """Feature rows with integer class labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    features: np.ndarray
    labels: np.ndarray
    class_count: int = Field(ge=2)
    name: str = "dataset"

    @model_validator(mode="after")
    def validate_dataset(self) -> "Dataset":
        """Check array ranks, row counts and label range."""
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got {self.features.ndim}-D")
        if self.labels.ndim != 1:
            raise ValueError(f"labels must be 1-D, got {self.labels.ndim}-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if self.labels.size and (
            int(self.labels.min()) < 0 or int(self.labels.max()) >= self.class_count
        ):
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        return self

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        """Number of feature columns."""
        return int(self.features.shape[1])

    def missing_classes(self) -> list[int]:
        """Class indices that have no sample."""
        present = set(np.unique(self.labels).tolist())
        return [c for c in range(self.class_count) if c not in present]


class DatasetPair(BaseModel):
    """The two halves of a randomization test.

    ``half_one`` carries incorrect labels, with the correct ones kept in
    ``original_labels``; ``half_two`` carries correct labels. The index arrays
    point back into the source dataset.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    half_one: Dataset
    original_labels: np.ndarray
    half_one_indices: np.ndarray
    half_two: Dataset
    half_two_indices: np.ndarray
    split_seed: int = Field(ge=0, le=SEED_MASK)
    m: int = Field(ge=1)
    dropped_index: int | None = None

    @model_validator(mode="after")
    def validate_pair(self) -> "DatasetPair":
        """Both halves have m rows and every incorrect label is really incorrect."""
        if len(self.half_one) != self.m or len(self.half_two) != self.m:
            raise ValueError(
                f"halves must both have {self.m} rows, "
                f"got {len(self.half_one)} and {len(self.half_two)}"
            )
        if self.original_labels.shape != self.half_one.labels.shape:
            raise ValueError("original_labels must parallel half_one labels")
        if np.any(self.original_labels == self.half_one.labels):
            raise ValueError("every half_one label must differ from its original label")
        return self


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------


class EpochRisk(BaseModel):
    """Risks on both halves after one epoch."""

    v1: float = Field(ge=0, le=1, description="Risk of half one against incorrect labels")
    v2: float = Field(ge=0, le=1, description="Risk of half two against correct labels")


class TrainRun(BaseModel):
    """Risk trajectory of one randomization-test training run."""

    epoch_risks: list[EpochRisk] = Field(min_length=1)
    final_err: float = Field(ge=0, le=1)
    m: int = Field(ge=1)
    model_id: str = "model"
    setting_id: str = "setting"
    seed: int = Field(default=0, ge=0, le=SEED_MASK)


class CDMeasurement(BaseModel):
    """Confidence Dimension of one model under one setting."""

    p: float = Field(ge=0, le=1)
    delta: float = Field(ge=0)
    cd: float = Field(ge=0, le=1)
    bound_prob: float = Field(gt=0, lt=1)
    alpha: float = Field(gt=0)
    m: int = Field(ge=1)
    model_id: str
    setting_id: str
    err: float = Field(default=0.0, ge=0, le=1, description="Training error Err")
    seed: int | None = None
    config_hash: str | None = None

    @model_validator(mode="after")
    def validate_derived(self) -> "CDMeasurement":
        """cd and bound_prob must agree with p, delta and err."""
        expected_cd = min(1.0, self.p + self.delta)
        if abs(self.cd - expected_cd) > _DERIVED_TOL:
            raise ValueError(f"cd={self.cd} but min(1, p + delta)={expected_cd}")
        expected_bound = 1.0 - (2.0 + self.err) ** -4
        if abs(self.bound_prob - expected_bound) > _DERIVED_TOL:
            raise ValueError(f"bound_prob={self.bound_prob} but Err gives {expected_bound}")
        return self


class VCScaleConfig(BaseModel):
    """Constants of the VC-dimension proportionality."""

    zeta: float = Field(default=1.0, gt=0)
    eps: float = Field(default=0.0, ge=0)


class PerformanceChange(BaseModel):
    """Relative change of two configurations across two tasks."""

    rate_a: float = Field(description="Signed relative change on task A")
    rate_b: float = Field(description="Signed relative change on task B")
    verdict: Verdict


# ---------------------------------------------------------------------------
# Concentration laboratory
# ---------------------------------------------------------------------------


class ConcentrationSource(BaseModel):
    """A [0, 1]-bounded i.i.d. source."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SourceKind = SourceKind.BERNOULLI
    p: float = Field(default=0.5, description="Bernoulli success probability")
    a: float = Field(default=2.0, description="Beta shape a")
    b: float = Field(default=2.0, description="Beta shape b")

    @model_validator(mode="after")
    def validate_parameters(self) -> "ConcentrationSource":
        """Check parameters for the chosen family."""
        if self.kind == SourceKind.BERNOULLI and not 0.0 <= self.p <= 1.0:
            raise ValueError(f"bernoulli p must lie in [0, 1], got {self.p}")
        if self.kind == SourceKind.BETA and (self.a <= 0 or self.b <= 0):
            raise ValueError(f"beta shapes must be positive, got a={self.a}, b={self.b}")
        return self

    @property
    def mean(self) -> float:
        """True expectation of one draw."""
        if self.kind == SourceKind.BERNOULLI:
            return self.p
        if self.kind == SourceKind.UNIFORM01:
            return 0.5
        return self.a / (self.a + self.b)

    @property
    def label(self) -> str:
        """Short description used in reports, e.g. ``bernoulli(0.5)``."""
        if self.kind == SourceKind.BERNOULLI:
            return f"bernoulli({self.p:g})"
        if self.kind == SourceKind.BETA:
            return f"beta({self.a:g},{self.b:g})"
        return "uniform01"


class ConcentrationExperiment(BaseModel):
    """One Monte Carlo cell of the concentration check."""

    m: int = Field(ge=8, description="Batches per trial")
    trials: int = Field(ge=1)
    delta: float = Field(gt=0, lt=1, description="Deviation threshold")
    source: ConcentrationSource = Field(default_factory=ConcentrationSource)
    seed: int = Field(default=0, ge=0, le=SEED_MASK)


class ConcentrationResult(BaseModel):
    """Empirical coverage against the closed-form floor."""

    m: int
    delta: float
    source: str
    trials: int
    empirical_coverage: float = Field(ge=0, le=1)
    theoretical_floor: float = Field(le=1)
    slack: float
    stderr: float = Field(ge=0)

    def within_tolerance(self, n_stderr: float = 3.0) -> bool:
        """True when coverage is at least the floor minus ``n_stderr`` errors."""
        return self.empirical_coverage >= self.theoretical_floor - n_stderr * self.stderr


# ---------------------------------------------------------------------------
# Rankings
# ---------------------------------------------------------------------------


class RankEntry(BaseModel):
    """One model's position in a ranking."""

    model_id: str
    value: float
    rank: int = Field(ge=1)
    err: float = 0.0


class Ranking(BaseModel):
    """Models of one setting ordered by a metric, rank 1 = lowest value."""

    setting_id: str
    metric: RankMetric = RankMetric.CD
    ordered: list[RankEntry] = Field(min_length=1)

    @model_validator(mode="after")
    def validate_ranking(self) -> "Ranking":
        """Ranks form 1..n and values never decrease with rank."""
        ranks = [entry.rank for entry in self.ordered]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError(f"ranks must be 1..{len(ranks)} in order, got {ranks}")
        values = [entry.value for entry in self.ordered]
        if any(a > b for a, b in zip(values, values[1:], strict=False)):
            raise ValueError("values must be non-decreasing with rank")
        ids = [entry.model_id for entry in self.ordered]
        if len(ids) != len(set(ids)):
            raise ValueError("Duplicate model IDs found in ranking")
        return self

    def model_ids(self) -> list[str]:
        """Model IDs in rank order."""
        return [entry.model_id for entry in self.ordered]

    def rank_of(self, model_id: str) -> int:
        """Rank of a model in this setting."""
        for entry in self.ordered:
            if entry.model_id == model_id:
                return entry.rank
        raise KeyError(f"Model '{model_id}' not in ranking '{self.setting_id}'")


class ConsistencyReport(BaseModel):
    """Pairwise Kendall-tau agreement between rankings."""

    metric: RankMetric = RankMetric.CD
    rankings: list[Ranking]
    tau_matrix: list[list[float]]
    min_tau: float = Field(ge=-1, le=1)
    consistent: bool
    volatility: dict[str, float] = Field(default_factory=dict)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


class DatasetSpec(BaseModel):
    """How to build one dataset of an experiment."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(description="Unique identifier within the experiment")
    kind: DatasetKind
    class_count: int = Field(default=2, ge=2)
    per_class: int = Field(default=100, ge=1)
    spread: float = Field(default=0.3, ge=0)
    noise: float = Field(default=0.05, ge=0)
    images_path: Path | None = None
    labels_path: Path | None = None
    csv_path: Path | None = None
    classes: list[int] | None = Field(default=None, description="Optional class subset")
    per_class_cap: int | None = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0, le=SEED_MASK, description="Generator seed")

    @model_validator(mode="after")
    def validate_source(self) -> "DatasetSpec":
        """File-backed kinds need their paths."""
        if self.kind == DatasetKind.IDX and (self.images_path is None or self.labels_path is None):
            raise ValueError(f"idx dataset '{self.id}' requires images_path and labels_path")
        if self.kind == DatasetKind.CSV and self.csv_path is None:
            raise ValueError(f"csv dataset '{self.id}' requires csv_path")
        if self.classes is not None and len(self.classes) < 2:
            raise ValueError(f"dataset '{self.id}' class subset needs at least 2 classes")
        return self


class ModelEntry(BaseModel):
    """A candidate architecture; input and output sizes come from the dataset."""

    model_config = ConfigDict(extra="forbid")

    id: str
    hidden: list[int] = Field(default_factory=list, description="Hidden layer widths")
    precision: Precision = Precision.FULL
    activation: Activation = Activation.RELU

    @field_validator("hidden")
    @classmethod
    def validate_hidden(cls, v: list[int]) -> list[int]:
        """Hidden widths must be positive."""
        if any(width < 1 for width in v):
            raise ValueError(f"hidden widths must be >= 1, got {v}")
        return v

    def network_spec(self, input_dim: int, class_count: int, init_seed: int) -> NetworkSpec:
        """Build the concrete NetworkSpec for a dataset."""
        return NetworkSpec(
            layer_sizes=[input_dim, *self.hidden, class_count],
            precision=self.precision,
            activation=self.activation,
            init_seed=init_seed,
        )


class OptimizerEntry(OptimizerConfig):
    """An optimizer configuration with an identifier."""

    id: str


class ExperimentConfig(BaseModel):
    """Declarative model x dataset x optimizer grid."""

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    datasets: list[DatasetSpec] = Field(min_length=1)
    models: list[ModelEntry] = Field(min_length=1)
    optimizers: list[OptimizerEntry] = Field(
        default_factory=lambda: [OptimizerEntry(id="sgd", kind=OptimizerKind.SGD)],
        min_length=1,
    )
    epochs: int = Field(default=100, ge=1)
    batch_size: int = Field(default=32, ge=1)
    alpha: float = Field(default=1.0, gt=0)
    repeats: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, le=SEED_MASK)
    workers: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def validate_ids(self) -> "ExperimentConfig":
        """IDs must be unique within each list."""
        for label, ids in (
            ("dataset", [d.id for d in self.datasets]),
            ("model", [m.id for m in self.models]),
            ("optimizer", [o.id for o in self.optimizers]),
        ):
            if len(ids) != len(set(ids)):
                raise ValueError(f"Duplicate {label} IDs found")
        return self

    def hashable_dump(self) -> dict[str, Any]:
        """Canonical content used for the config hash; excludes the worker count."""
        return self.model_dump(mode="json", exclude={"workers"})


class EpochSummary(BaseModel):
    """Compact trajectory entry kept in run records."""

    v1: float
    v2: float


class RepeatResult(BaseModel):
    """One repeat of one cell."""

    repeat: int = Field(ge=0)
    seed: int
    data_seed: int
    m: int = Field(ge=1)
    p: float
    p_sup_difference: float
    delta: float
    cd: float
    err: float
    bound_prob: float
    trajectory: list[EpochSummary] = Field(default_factory=list)
    duration_seconds: float = 0.0


class CellResult(BaseModel):
    """Outcome of one (dataset, model, optimizer) cell across repeats.

    ``measurement.p`` and ``measurement.err`` are means over repeats, and
    ``delta``, ``cd`` and ``bound_prob`` are computed from those means, so
    ``cd = min(1, p + delta)`` holds for the reported values. The reported CD
    is therefore not the mean of the per-repeat CDs; ``cd_min`` and ``cd_max``
    give the range of the per-repeat values.
    """

    index: int = Field(ge=0)
    dataset_id: str
    model_id: str
    optimizer_id: str
    setting_id: str
    m: int | None = None
    status: CellStatus = CellStatus.OK
    error: str | None = None
    measurement: CDMeasurement | None = None
    repeats: list[RepeatResult] = Field(default_factory=list)
    p_min: float | None = None
    p_max: float | None = None
    cd_min: float | None = None
    cd_max: float | None = None
    duration_seconds: float = 0.0


class RunRecord(BaseModel):
    """Everything one experiment run produced."""

    config: ExperimentConfig
    config_hash: str
    version: str
    created_at: datetime = Field(default_factory=datetime.now)
    cells: list[CellResult] = Field(default_factory=list)
    duration_seconds: float = 0.0

    @property
    def record_id(self) -> str:
        """Identifier used for persistence."""
        return self.config_hash

    def successful_cells(self) -> list[CellResult]:
        """Cells with a measurement, in cell-index order."""
        return [c for c in self.cells if c.status == CellStatus.OK and c.measurement is not None]

    def failed_cells(self) -> list[CellResult]:
        """Cells that raised during execution."""
        return [c for c in self.cells if c.status == CellStatus.FAILED]

    def canonical_json(self) -> str:
        """Deterministic JSON without timestamps or durations."""
        data = self.model_dump(mode="json", exclude={"created_at", "duration_seconds"})
        for cell in data["cells"]:
            cell.pop("duration_seconds", None)
            for repeat in cell["repeats"]:
                repeat.pop("duration_seconds", None)
        return canonical_json(data)


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------


def _default_workers() -> int:
    return max(1, psutil.cpu_count(logical=False) or 1)


class ToolkitSettings(BaseSettings):
    """Toolkit settings, overridable with CDTOOLKIT_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="CDTOOLKIT_")

    data_dir: Path = Field(default=Path.home() / ".cdtoolkit")
    workers: int = Field(default_factory=_default_workers, ge=1)
    log_level: str = "INFO"
    default_alpha: float = Field(default=1.0, gt=0)

    @field_validator("data_dir", mode="before")
    @classmethod
    def validate_data_dir(cls, v: str | Path) -> Path:
        """Convert string to Path."""
        return Path(v).expanduser() if isinstance(v, str) else v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accept standard level names in any case."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR"}:
            raise ValueError(f"Unsupported log level: {v}")
        return level

    @property
    def records_dir(self) -> Path:
        """Directory holding persisted run records."""
        return self.data_dir / "records"

    @property
    def reports_dir(self) -> Path:
        """Directory holding emitted reports."""
        return self.data_dir / "reports"

    def ensure_directories(self) -> None:
        """Create necessary directories."""
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.records_dir.mkdir(exist_ok=True)
        self.reports_dir.mkdir(exist_ok=True)


def is_unit_interval(value: float) -> bool:
    """True for finite values in [0, 1]."""
    return math.isfinite(value) and 0.0 <= value <= 1.0
