"""Datasets for randomization tests: generators, IDX/CSV I/O, subsetting, label corruption."""

import csv
import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataFormatError
from .models import Dataset, DatasetKind, DatasetPair, DatasetSpec
from .utils.logging import setup_logger
from .utils.seeding import make_rng

logger = setup_logger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

# Angular extent of each spiral arm, in radians.
SPIRAL_SWEEP = 3 * np.pi


def _require_all_classes(ds: Dataset) -> Dataset:
    missing = ds.missing_classes()
    if missing:
        raise ConfigurationError(f"Dataset '{ds.name}' has no samples for classes {missing}")
    return ds


def make_blobs(
    class_count: int,
    per_class: int,
    spread: float,
    seed: int,
    name: str = "blobs",
) -> Dataset:
    """Gaussian clusters centred on the unit circle.

    Class ``c`` is centred at angle ``2*pi*c/k``. Samples are ordered class by
    class.

    Args:
        class_count: Number of classes k (>= 2)
        per_class: Samples per class (>= 1)
        spread: Standard deviation of each cluster (>= 0)
        seed: Generator seed
        name: Dataset name

    Returns:
        Dataset with ``class_count * per_class`` rows

    Raises:
        ConfigurationError: If a parameter is out of range
    """
    if class_count < 2:
        raise ConfigurationError(f"make_blobs needs class_count >= 2, got {class_count}")
    if per_class < 1:
        raise ConfigurationError(f"make_blobs needs per_class >= 1, got {per_class}")
    if spread < 0:
        raise ConfigurationError(f"make_blobs needs spread >= 0, got {spread}")

    rng = make_rng(seed)
    angles = 2 * np.pi * np.arange(class_count) / class_count
    centers = np.column_stack([np.cos(angles), np.sin(angles)])
    labels = np.repeat(np.arange(class_count, dtype=np.int64), per_class)
    features = centers[labels] + spread * rng.standard_normal((labels.size, 2))

    return Dataset(features=features, labels=labels, class_count=class_count, name=name)


def make_spirals(
    per_class: int,
    noise: float,
    seed: int,
    class_count: int = 2,
    name: str = "spirals",
) -> Dataset:
    """Interleaved spiral arms.

    Point ``i`` of arm ``c`` sits at radius ``t = (i + 1) / n`` and angle
    ``SPIRAL_SWEEP * t + 2*pi*c/k``, plus isotropic Gaussian noise.

    Args:
        per_class: Points per arm (>= 1)
        noise: Standard deviation of the added noise (>= 0)
        seed: Generator seed
        class_count: Number of arms (default 2)
        name: Dataset name

    Returns:
        Dataset with ``class_count * per_class`` rows

    Raises:
        ConfigurationError: If a parameter is out of range
    """
    if class_count < 2:
        raise ConfigurationError(f"make_spirals needs class_count >= 2, got {class_count}")
    if per_class < 1:
        raise ConfigurationError(f"make_spirals needs per_class >= 1, got {per_class}")
    if noise < 0:
        raise ConfigurationError(f"make_spirals needs noise >= 0, got {noise}")

    rng = make_rng(seed)
    t = np.arange(1, per_class + 1) / per_class
    labels = np.repeat(np.arange(class_count, dtype=np.int64), per_class)
    radius = np.tile(t, class_count)
    theta = SPIRAL_SWEEP * radius + 2 * np.pi * labels / class_count
    features = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    features = features + noise * rng.standard_normal(features.shape)

    return Dataset(features=features, labels=labels, class_count=class_count, name=name)


def _read_idx_header(path: Path, data: bytes, magic: int, dims: int) -> tuple[int, ...]:
    header_size = 4 + 4 * dims
    if len(data) < header_size:
        raise DataFormatError(path, f"truncated header ({len(data)} bytes)")
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise DataFormatError(path, f"bad magic number 0x{found:08X}, expected 0x{magic:08X}")
    return struct.unpack(f">{dims}I", data[4:header_size])


def load_idx(images_path: Path, labels_path: Path, name: str | None = None) -> Dataset:
    """Load an IDX image/label file pair.

    Images use magic 0x00000803 with dimensions (count, rows, cols); labels use
    magic 0x00000801 with a single count. Pixels are scaled from [0, 255] to
    [0, 1] and flattened row-major.

    Args:
        images_path: IDX image file
        labels_path: IDX label file
        name: Dataset name (defaults to the image file stem)

    Returns:
        Dataset with one row per image and ``max(label) + 1`` classes

    Raises:
        DataFormatError: On a bad magic number, truncation or count mismatch
        OSError: If a file cannot be read
    """
    images_path = Path(images_path)
    labels_path = Path(labels_path)
    image_bytes = images_path.read_bytes()
    label_bytes = labels_path.read_bytes()

    count, rows, cols = _read_idx_header(images_path, image_bytes, IDX_IMAGES_MAGIC, 3)
    pixel_count = count * rows * cols
    if len(image_bytes) < 16 + pixel_count:
        raise DataFormatError(
            images_path, f"truncated: expected {pixel_count} pixel bytes after header"
        )

    (label_count,) = _read_idx_header(labels_path, label_bytes, IDX_LABELS_MAGIC, 1)
    if len(label_bytes) < 8 + label_count:
        raise DataFormatError(labels_path, f"truncated: expected {label_count} label bytes")
    if label_count != count:
        raise DataFormatError(labels_path, f"{label_count} labels but {count} images")

    pixels = np.frombuffer(image_bytes, dtype=np.uint8, count=pixel_count, offset=16)
    features = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    labels = np.frombuffer(label_bytes, dtype=np.uint8, count=label_count, offset=8)
    labels = labels.astype(np.int64)

    class_count = int(labels.max()) + 1 if labels.size else 0
    if class_count < 2:
        raise DataFormatError(labels_path, "IDX labels must contain at least two classes")

    logger.info(f"Loaded {count} images ({rows}x{cols}) from {images_path}")
    ds = Dataset(
        features=features,
        labels=labels,
        class_count=class_count,
        name=name or images_path.stem,
    )
    return _require_all_classes(ds)


def save_csv(ds: Dataset, path: Path) -> None:
    """Write a dataset as CSV with header ``label,f0,f1,...``.

    Args:
        ds: Dataset to export
        path: Destination file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label", *(f"f{i}" for i in range(ds.input_dim))])
        for label, row in zip(ds.labels.tolist(), ds.features.tolist(), strict=True):
            writer.writerow([label, *(repr(float(v)) for v in row)])


def load_csv(path: Path, class_count: int | None = None, name: str | None = None) -> Dataset:
    """Read a dataset written by :func:`save_csv`.

    Args:
        path: Source file
        class_count: Number of classes (defaults to ``max(label) + 1``)
        name: Dataset name (defaults to the file stem)

    Returns:
        Dataset

    Raises:
        DataFormatError: If the header or a row is malformed
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))

    if not rows or not rows[0] or rows[0][0] != "label":
        raise DataFormatError(path, "missing 'label,f0,...' header")
    width = len(rows[0]) - 1
    if rows[0][1:] != [f"f{i}" for i in range(width)]:
        raise DataFormatError(path, f"unexpected feature columns {rows[0][1:]}")

    labels: list[int] = []
    features: list[list[float]] = []
    for line_number, row in enumerate(rows[1:], start=2):
        if len(row) != width + 1:
            raise DataFormatError(path, f"line {line_number}: expected {width + 1} fields")
        try:
            labels.append(int(row[0]))
            features.append([float(v) for v in row[1:]])
        except ValueError as e:
            raise DataFormatError(path, f"line {line_number}: {e}") from e

    label_array = np.asarray(labels, dtype=np.int64)
    inferred = int(label_array.max()) + 1 if label_array.size else 0
    try:
        return Dataset(
            features=np.asarray(features, dtype=np.float64).reshape(len(labels), width),
            labels=label_array,
            class_count=class_count if class_count is not None else inferred,
            name=name or path.stem,
        )
    except ValueError as e:
        raise DataFormatError(path, str(e)) from e


def subset_classes(
    ds: Dataset, classes: Sequence[int], per_class_cap: int | None = None
) -> Dataset:
    """Keep only some classes and re-index them densely.

    ``classes[j]`` becomes label ``j``. Retained samples keep their original
    order; with a cap, the first ``per_class_cap`` samples of each class are
    kept.

    Args:
        ds: Source dataset
        classes: Class indices to keep, at least two, no duplicates
        per_class_cap: Optional maximum number of samples per class

    Returns:
        Dataset with ``len(classes)`` classes

    Raises:
        ConfigurationError: If a class is unknown or the selection is invalid
    """
    classes = list(classes)
    if len(classes) < 2:
        raise ConfigurationError(f"subset_classes needs at least 2 classes, got {classes}")
    if len(set(classes)) != len(classes):
        raise ConfigurationError(f"Duplicate classes in subset {classes}")
    present = set(np.unique(ds.labels).tolist())
    unknown = [c for c in classes if c not in present]
    if unknown:
        raise ConfigurationError(f"Unknown classes {unknown} for dataset '{ds.name}'")
    if per_class_cap is not None and per_class_cap < 1:
        raise ConfigurationError(f"per_class_cap must be >= 1, got {per_class_cap}")

    remap = {c: j for j, c in enumerate(classes)}
    taken = dict.fromkeys(classes, 0)
    keep: list[int] = []
    for i, label in enumerate(ds.labels.tolist()):
        if label not in remap:
            continue
        if per_class_cap is not None and taken[label] >= per_class_cap:
            continue
        taken[label] += 1
        keep.append(i)

    index = np.asarray(keep, dtype=np.int64)
    new_labels = np.asarray([remap[int(y)] for y in ds.labels[index]], dtype=np.int64)
    return Dataset(
        features=ds.features[index],
        labels=new_labels,
        class_count=len(classes),
        name=ds.name,
    )


def corrupt_half(ds: Dataset, seed: int) -> DatasetPair:
    """Split a dataset into an incorrectly labelled half and a correct half.

    A uniformly random permutation assigns samples to the halves; with an
    odd sample count the last permuted sample is dropped. Every label of half
    one is replaced by one drawn uniformly from the other ``k - 1`` classes.

    Args:
        ds: Source dataset
        seed: Split and corruption seed

    Returns:
        Dataset pair

    Raises:
        ConfigurationError: If the dataset has fewer than 2 samples
    """
    n = len(ds)
    if n < 2:
        raise ConfigurationError(f"corrupt_half needs at least 2 samples, got {n}")

    rng = make_rng(seed)
    order = rng.permutation(n)
    dropped_index: int | None = None
    if n % 2:
        dropped_index = int(order[-1])
        order = order[:-1]
        logger.warning(f"Dataset '{ds.name}' has {n} samples; dropped sample {dropped_index}")

    m = order.size // 2
    one, two = order[:m], order[m:]
    k = ds.class_count
    original = ds.labels[one]
    incorrect = (original + rng.integers(1, k, size=m)) % k

    return DatasetPair(
        half_one=Dataset(
            features=ds.features[one],
            labels=incorrect.astype(np.int64),
            class_count=k,
            name=f"{ds.name}/incorrect",
        ),
        original_labels=original,
        half_one_indices=one,
        half_two=Dataset(
            features=ds.features[two],
            labels=ds.labels[two],
            class_count=k,
            name=f"{ds.name}/correct",
        ),
        half_two_indices=two,
        split_seed=seed,
        m=m,
        dropped_index=dropped_index,
    )


def training_arrays(pair: DatasetPair) -> tuple[np.ndarray, np.ndarray]:
    """Features and training targets of both halves stacked, half one first."""
    features = np.concatenate([pair.half_one.features, pair.half_two.features])
    targets = np.concatenate([pair.half_one.labels, pair.half_two.labels])
    return features, targets


def build_dataset(spec: DatasetSpec) -> Dataset:
    """Materialize a dataset from its experiment specification.

    Args:
        spec: Dataset specification

    Returns:
        Dataset, subset and capped as requested

    Raises:
        ConfigurationError: If the dataset entry is inconsistent
        DataFormatError: If a file-backed dataset is malformed
    """
    if spec.kind == DatasetKind.BLOBS:
        ds = make_blobs(spec.class_count, spec.per_class, spec.spread, spec.seed, name=spec.id)
    elif spec.kind == DatasetKind.SPIRALS:
        ds = make_spirals(
            spec.per_class, spec.noise, spec.seed, class_count=spec.class_count, name=spec.id
        )
    elif spec.kind == DatasetKind.IDX:
        assert spec.images_path is not None and spec.labels_path is not None
        ds = load_idx(spec.images_path, spec.labels_path, name=spec.id)
    else:
        assert spec.csv_path is not None
        ds = _require_all_classes(load_csv(spec.csv_path, name=spec.id))

    if spec.classes is not None or spec.per_class_cap is not None:
        classes = spec.classes if spec.classes is not None else list(range(ds.class_count))
        ds = subset_classes(ds, classes, spec.per_class_cap)
    return ds
