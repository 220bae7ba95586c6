"""Dataset loading, splits, normalization and synthetic generation.

A Dataset is an immutable bundle of a feature matrix and integer labels;
sample ids are row indices (0..n-1). True labels live here but must only
reach the learner through an oracle.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class Sample:
    """One pool element; true_label is for the oracle and metrics only."""

    id: int
    features: np.ndarray
    true_label: int


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int, the hidden ground truth
    class_count: int
    class_names: list[str] | None = None

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise ValueError("features must be 2-d")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("one label per row required")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("label outside [0, class_count)")
        if not np.isfinite(self.features).all():
            raise ValueError("non-finite feature value")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def sample(self, sample_id: int) -> Sample:
        return Sample(
            id=sample_id,
            features=self.features[sample_id],
            true_label=int(self.labels[sample_id]),
        )

    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(len(self))]

    def subset(self, ids: np.ndarray) -> "Dataset":
        """New dataset from the given rows, re-indexed to 0..len-1."""
        return Dataset(
            features=self.features[ids].copy(),
            labels=self.labels[ids].copy(),
            class_count=self.class_count,
            class_names=self.class_names,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    init_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if not 0 < self.init_fraction <= 1:
            raise ValueError("init_fraction must be in (0, 1]")


def load_csv(path: str | Path) -> Dataset:
    """CSV with a header row whose final column is `label`.

    Class count is inferred as max label + 1; malformed rows raise with
    their line number.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header[-1] != "label":
        raise ValueError(f"{path}: last header column must be 'label'")
    n_cols = len(header)
    rows, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != n_cols:
            raise ValueError(f"{path} line {lineno}: expected {n_cols} columns, got {len(cells)}")
        try:
            feats = [float(c) for c in cells[:-1]]
            label = int(cells[-1])
        except ValueError as exc:
            raise ValueError(f"{path} line {lineno}: non-numeric cell") from exc
        if label < 0:
            raise ValueError(f"{path} line {lineno}: negative label")
        rows.append(feats)
        labels.append(label)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        features=np.array(rows, dtype=float),
        labels=np.array(labels, dtype=int),
        class_count=max(labels) + 1,
        class_names=None,
    )


def _read_idx_header(fh, path, magic_expected: int, n_dims: int) -> list[int]:
    head = fh.read(4 * (1 + n_dims))
    if len(head) < 4 * (1 + n_dims):
        raise ValueError(f"{path}: truncated IDX header")
    fields = struct.unpack(f">{1 + n_dims}i", head)
    if fields[0] != magic_expected:
        raise ValueError(f"{path}: bad IDX magic {fields[0]:#010x}")
    return list(fields[1:])


def load_idx(images_path: str | Path, labels_path: str | Path) -> Dataset:
    """MNIST-style big-endian IDX pair; pixels scaled to [0, 1]."""
    with open(images_path, "rb") as fh:
        count, rows, cols = _read_idx_header(fh, images_path, IDX_IMAGE_MAGIC, 3)
        raw = fh.read()
        if len(raw) < count * rows * cols:
            raise ValueError(f"{images_path}: truncated pixel data")
        pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols)
    with open(labels_path, "rb") as fh:
        (label_count,) = _read_idx_header(fh, labels_path, IDX_LABEL_MAGIC, 1)
        raw = fh.read()
        if len(raw) < label_count:
            raise ValueError(f"{labels_path}: truncated label data")
        labels = np.frombuffer(raw, dtype=np.uint8, count=label_count).astype(int)
    if label_count != count:
        raise ValueError(f"image count {count} != label count {label_count}")
    features = pixels.reshape(count, rows * cols).astype(float) / 255.0
    return Dataset(
        features=features,
        labels=labels,
        class_count=int(labels.max()) + 1 if count else 0,
        class_names=None,
    )


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified per-class train/test split, seed-deterministic.

    At least one sample per class lands on each side.
    """
    rng = np.random.default_rng(spec.seed)
    train_idx, test_idx = [], []
    for c in range(dataset.class_count):
        members = np.flatnonzero(dataset.labels == c)
        if len(members) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples")
        n_train = int(round(spec.train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        perm = rng.permutation(members)
        train_idx.extend(perm[:n_train])
        test_idx.extend(perm[n_train:])
    train_idx = np.sort(np.array(train_idx))
    test_idx = np.sort(np.array(test_idx))
    return dataset.subset(train_idx), dataset.subset(test_idx)


def synth_gaussian_mixture(
    class_count: int,
    per_class: int,
    dim: int,
    class_separation: float,
    seed: int = 0,
) -> Dataset:
    """Isotropic unit-variance Gaussians at scaled hypercube corners.

    Class c is centered at class_separation times the dim-bit binary
    encoding of c, so the minimum center distance equals the separation.
    """
    if class_count < 2 or dim < 2:
        raise ValueError("need class_count >= 2 and dim >= 2")
    if class_count > 2**dim:
        raise ValueError("too many classes for the hypercube corners")
    rng = np.random.default_rng(seed)
    centers = np.zeros((class_count, dim))
    for c in range(class_count):
        bits = [(c >> b) & 1 for b in range(dim)]
        centers[c] = np.array(bits, dtype=float) * class_separation
    features = np.vstack(
        [centers[c] + rng.standard_normal((per_class, dim)) for c in range(class_count)]
    )
    labels = np.repeat(np.arange(class_count), per_class)
    return Dataset(features=features, labels=labels, class_count=class_count)


def feature_stats(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and standard deviation (population)."""
    if len(dataset) < 2:
        raise ValueError("need at least 2 samples for statistics")
    return dataset.features.mean(axis=0), dataset.features.std(axis=0)


def normalize(
    dataset: Dataset, stats: tuple[np.ndarray, np.ndarray] | None = None
) -> Dataset:
    """Standardize each dimension to mean 0, variance 1.

    Pass the training pool's feature_stats() to normalize a test set
    with the same statistics; zero-variance dimensions map to 0.
    """
    mean, std = stats if stats is not None else feature_stats(dataset)
    safe_std = np.where(std > 0, std, 1.0)
    scaled = (dataset.features - mean) / safe_std
    scaled[:, std == 0] = 0.0
    return Dataset(
        features=scaled,
        labels=dataset.labels.copy(),
        class_count=dataset.class_count,
        class_names=dataset.class_names,
    )


def sidecar_image_path(directory: str | Path, sample_id: int) -> Path | None:
    """Path to the per-id display image, if the sidecar file exists."""
    path = Path(directory) / f"{sample_id}.png"
    return path if path.is_file() else None
