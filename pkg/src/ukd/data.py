"""Seeded Gaussian-mixture classification data with batching and augmentation.

Class means sit on the unit sphere; samples spread around them with an
isotropic overlap_sigma. The overlap is the point: it makes some regions
genuinely ambiguous, so a trained classifier's confidence varies from sample
to sample instead of saturating at 1.

Features are stored raw. Normalization statistics come from the training
split only; both splits are normalized with them at batch time. The split
itself is a pure function of the label layout (the last val-fraction of each
class's rows), so a dataset exported to a file and re-imported reconstructs
the identical split and statistics.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError, ParameterError, SpecError

UKDD_MAGIC = b"UKDD"
UKDD_VERSION = 1
SPLITS = ("train", "val")


@dataclass(frozen=True)
class DatasetSpec:
    """Generation recipe; every field participates in reproducibility."""

    num_classes: int = 10
    samples_per_class: int = 500
    feature_dim: int = 16
    overlap_sigma: float = 0.6
    seed: int = 0
    val_fraction: float = 0.1


def _validate_spec(spec: DatasetSpec) -> None:
    if spec.num_classes < 2:
        raise SpecError(f"num_classes must be >= 2, got {spec.num_classes}")
    if spec.feature_dim < 2:
        raise SpecError(f"feature_dim must be >= 2, got {spec.feature_dim}")
    if spec.samples_per_class < 1:
        raise SpecError(f"samples_per_class must be >= 1, got {spec.samples_per_class}")
    if not spec.overlap_sigma > 0:
        raise SpecError(f"overlap_sigma must be positive, got {spec.overlap_sigma}")
    if not 0.0 < spec.val_fraction < 1.0:
        raise SpecError(f"val_fraction must lie in (0,1), got {spec.val_fraction}")
    if spec.seed < 0:
        raise SpecError(f"seed must be nonnegative, got {spec.seed}")


@dataclass
class Dataset:
    """Immutable-by-convention sample store with split indices and norm stats."""

    features: np.ndarray
    labels: np.ndarray
    train_indices: np.ndarray
    val_indices: np.ndarray
    norm_mean: np.ndarray
    norm_std: np.ndarray
    num_classes: int

    def split_indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise ParameterError(f"split must be one of {SPLITS}, got {split!r}")
        return self.train_indices if split == "train" else self.val_indices

    def split_arrays(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        """Normalized features and labels for one split."""
        idx = self.split_indices(split)
        normalized = (self.features[idx] - self.norm_mean) / self.norm_std
        return normalized, self.labels[idx]


def class_means(spec: DatasetSpec) -> np.ndarray:
    """The true class means on the unit sphere, as generate() draws them."""
    _validate_spec(spec)
    return _draw_means(np.random.default_rng(spec.seed), spec.num_classes, spec.feature_dim)


def _draw_means(rng: np.random.Generator, c: int, dim: int) -> np.ndarray:
    raw = rng.standard_normal((c, dim))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    if norms.min() < 1e-12:
        raise DataError("degenerate zero-norm class mean draw")
    return raw / norms


def generate(spec: DatasetSpec) -> Dataset:
    """Draw the mixture: means first, then per-class sample blocks, then split."""
    _validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    means = _draw_means(rng, spec.num_classes, spec.feature_dim)
    blocks = [
        means[c] + spec.overlap_sigma * rng.standard_normal((spec.samples_per_class, spec.feature_dim))
        for c in range(spec.num_classes)
    ]
    features = np.vstack(blocks)
    labels = np.repeat(np.arange(spec.num_classes, dtype=np.int64), spec.samples_per_class)
    return _assemble(features, labels, spec.num_classes, spec.val_fraction)


def _assemble(features: np.ndarray, labels: np.ndarray, num_classes: int,
              val_fraction: float) -> Dataset:
    """Stratified split (last val-fraction rows of each class) plus train-only stats."""
    if not 0.0 < val_fraction < 1.0:
        raise SpecError(f"val_fraction must lie in (0,1), got {val_fraction}")
    train_parts, val_parts = [], []
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        val_count = int(round(val_fraction * idx.size))
        train_parts.append(idx[: idx.size - val_count])
        val_parts.append(idx[idx.size - val_count:])
    train_idx = np.concatenate(train_parts)
    val_idx = np.concatenate(val_parts) if val_parts else np.empty(0, dtype=np.int64)
    if train_idx.size == 0:
        raise DataError("training split is empty")
    train_feats = features[train_idx]
    mean = train_feats.mean(axis=0)
    std = train_feats.std(axis=0)
    if std.min() <= 0.0:
        raise DataError("degenerate training split: a feature has zero spread")
    return Dataset(
        features=features,
        labels=labels,
        train_indices=train_idx,
        val_indices=val_idx,
        norm_mean=mean,
        norm_std=std,
        num_classes=num_classes,
    )


def batches(ds: Dataset, split: str, batch_size: int, shuffle_seed: int,
            epoch: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Normalized (features, labels) batches; train order is a per-epoch permutation.

    Validation order is fixed. The last partial batch is kept.
    """
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    if epoch < 0 or shuffle_seed < 0:
        raise ParameterError("shuffle_seed and epoch must be nonnegative")
    feats, labels = ds.split_arrays(split)
    if feats.shape[0] == 0:
        raise DataError(f"split {split!r} is empty")
    if split == "train":
        order = np.random.default_rng([shuffle_seed, epoch]).permutation(feats.shape[0])
        feats, labels = feats[order], labels[order]
    return [
        (feats[i: i + batch_size], labels[i: i + batch_size])
        for i in range(0, feats.shape[0], batch_size)
    ]


def augment(x: np.ndarray, strength: float, rng: np.random.Generator,
            flip: bool = False) -> np.ndarray:
    """Additive N(0, strength^2) noise, then optional per-sample coordinate sign flips.

    When flip is on, each sample is flipped with probability 1/2, and a flipped
    sample negates each coordinate independently with probability 1/2. Draw
    order is fixed: noise first, then the flip gates, then the coordinate mask.
    """
    if strength < 0:
        raise ParameterError(f"strength must be nonnegative, got {strength}")
    out = x + rng.normal(0.0, strength, x.shape)
    if flip:
        gate = rng.random(x.shape[0]) < 0.5
        mask = rng.random(x.shape) < 0.5
        out = np.where(gate[:, None] & mask, -out, out)
    return out


def bayes_oracle_accuracy(spec: DatasetSpec, mc_samples: int = 20_000,
                          mc_seed: int = 2_000_000) -> float:
    """Monte Carlo accuracy of the true-posterior classifier on fresh draws.

    Equal priors and isotropic equal covariance make the Bayes rule exactly
    nearest-class-mean; this estimates the ceiling any trained model can reach.
    """
    if mc_samples < 1:
        raise ParameterError(f"mc_samples must be >= 1, got {mc_samples}")
    means = class_means(spec)
    rng = np.random.default_rng([spec.seed, mc_seed])
    labels = rng.integers(0, spec.num_classes, mc_samples)
    points = means[labels] + spec.overlap_sigma * rng.standard_normal((mc_samples, spec.feature_dim))
    predicted = nearest_mean_classify(points, means)
    return float((predicted == labels).mean())


def nearest_mean_classify(points: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Index of the closest mean per row (squared Euclidean)."""
    d2 = ((points[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


# ---------------------------------------------------------------- file formats


def save_dataset(ds: Dataset, path) -> None:
    """Flat binary export: UKDD magic, version, C, N, dim, labels, raw features."""
    n, dim = ds.features.shape
    with open(path, "wb") as fh:
        fh.write(UKDD_MAGIC)
        fh.write(struct.pack("<IIII", UKDD_VERSION, ds.num_classes, n, dim))
        fh.write(ds.labels.astype("<u4").tobytes())
        fh.write(ds.features.astype("<f8").tobytes())


def load_dataset(path, val_fraction: float = 0.1) -> Dataset:
    """Rebuild a Dataset from a UKDD file; split and stats are recomputed."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20:
        raise FormatError(f"file truncated at offset {len(blob)}: header needs 20 bytes")
    if blob[:4] != UKDD_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r} at offset 0, expected {UKDD_MAGIC!r}")
    version, num_classes, n, dim = struct.unpack("<IIII", blob[4:20])
    if version != UKDD_VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")
    if num_classes < 2 or dim < 2 or n < 1:
        raise FormatError(f"implausible dimensions C={num_classes} N={n} dim={dim} at offset 8")
    labels_end = 20 + 4 * n
    total = labels_end + 8 * n * dim
    if len(blob) != total:
        raise FormatError(
            f"expected {total} bytes for C={num_classes} N={n} dim={dim}, got {len(blob)} "
            f"(payload starts at offset 20)"
        )
    labels = np.frombuffer(blob[20:labels_end], dtype="<u4").astype(np.int64)
    if (labels >= num_classes).any():
        raise FormatError(f"label out of range [0, {num_classes}) at offset 20")
    features = np.frombuffer(blob[labels_end:], dtype="<f8").reshape(n, dim).copy()
    return _assemble(features, labels, num_classes, val_fraction)


def export_csv(ds: Dataset, path) -> None:
    """Raw features with labels, one row per sample, for outside inspection."""
    dim = ds.features.shape[1]
    header = "label," + ",".join(f"f{i}" for i in range(dim))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for label, row in zip(ds.labels, ds.features):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
