"""Datasets: seeded Gaussian mixtures, IDX (MNIST-format) files, splitting.

Every constructor produces features in [0, 1].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    CountMismatchError,
    DimensionError,
    TruncatedFileError,
    WrongMagicError,
)
from .numcore import RngStream

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64
    class_count: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DimensionError(
                f"{features.shape[0]} feature rows but labels have shape {labels.shape}"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ArgumentError(f"labels must lie in [0, {self.class_count})")
        if features.size and (features.min() < 0.0 or features.max() > 1.0):
            raise ArgumentError("features must lie in [0, 1]")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_count)


def gen_gaussian_mixture(
    classes: int, dim: int, n_per_class: int, spread: float, seed: int
) -> Dataset:
    """Isotropic Gaussian blobs around means drawn uniformly in [0.2, 0.8]^dim.

    Draw order (fixed, so other implementations can reproduce it): all
    class means row by row, then for each class in turn its points
    coordinate by coordinate. Samples are clipped to [0, 1].
    """
    if classes < 2 or dim < 2 or n_per_class < 1 or not spread > 0:
        raise ArgumentError(
            f"need classes>=2, dim>=2, n_per_class>=1, spread>0; got "
            f"{classes}, {dim}, {n_per_class}, {spread}"
        )
    rng = RngStream(seed)
    means = np.array([[0.2 + 0.6 * rng.uniform() for _ in range(dim)] for _ in range(classes)])
    rows = []
    for c in range(classes):
        noise = rng.gauss_array(n_per_class * dim).reshape(n_per_class, dim)
        rows.append(means[c] + spread * noise)
    features = np.clip(np.vstack(rows), 0.0, 1.0)
    labels = np.repeat(np.arange(classes), n_per_class)
    return Dataset(features, labels, classes)


def _read_header(raw: bytes, path, magic: int, ndims: int) -> tuple[int, ...]:
    size = 4 * (1 + ndims)
    if len(raw) < size:
        raise TruncatedFileError(f"{path}: header needs {size} bytes, file has {len(raw)}")
    found, *dims = struct.unpack(f">{1 + ndims}I", raw[:size])
    if found != magic:
        raise WrongMagicError(f"{path}: magic 0x{found:08X}, expected 0x{magic:08X}")
    return tuple(dims)


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label file pair; pixels are scaled by 1/255."""
    img_raw = Path(images_path).read_bytes()
    lab_raw = Path(labels_path).read_bytes()
    count, rows, cols = _read_header(img_raw, images_path, IDX_IMAGES_MAGIC, 3)
    (label_count,) = _read_header(lab_raw, labels_path, IDX_LABELS_MAGIC, 1)
    if count != label_count:
        raise CountMismatchError(
            f"{images_path} holds {count} images but {labels_path} holds {label_count} labels"
        )
    pixels = img_raw[16:]
    expected = count * rows * cols
    if len(pixels) < expected:
        raise TruncatedFileError(
            f"{images_path}: expected {expected} pixel bytes, found {len(pixels)}"
        )
    labels = lab_raw[8:]
    if len(labels) < count:
        raise TruncatedFileError(f"{labels_path}: expected {count} labels, found {len(labels)}")
    x = np.frombuffer(pixels[:expected], dtype=np.uint8).reshape(count, rows * cols)
    y = np.frombuffer(labels[:count], dtype=np.uint8).astype(np.int64)
    class_count = int(y.max()) + 1 if count else 0
    return Dataset(x.astype(np.float64) / 255.0, y, class_count)


def write_idx(images_path, labels_path, images: np.ndarray, labels) -> None:
    """Write uint8 images ``(count, rows, cols)`` and labels as an IDX pair."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    count, rows, cols = images.shape
    Path(images_path).write_bytes(
        struct.pack(">4I", IDX_IMAGES_MAGIC, count, rows, cols) + images.tobytes()
    )
    Path(labels_path).write_bytes(
        struct.pack(">2I", IDX_LABELS_MAGIC, labels.size) + labels.tobytes()
    )


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then the first ``round(n * test_fraction)`` go to test."""
    if not 0.0 < test_fraction < 1.0:
        raise ArgumentError(f"test_fraction must be in (0, 1), got {test_fraction}")
    perm = RngStream(seed).permutation(len(data))
    n_test = int(round(len(data) * test_fraction))
    return data.subset(perm[n_test:]), data.subset(perm[:n_test])
