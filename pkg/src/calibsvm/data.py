"""Dataset containers, file loaders, sample augmentation and stratified splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised for malformed input files and invalid dataset operations."""


def _normalize_label(raw: float, where: str) -> int:
    # 0 and -1 both mean the negative class; anything else but +1 is rejected.
    if raw == 1.0:
        return 1
    if raw == 0.0 or raw == -1.0:
        return -1
    raise DataError(f"label {raw!r} not in {{0, -1, +1}} {where}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix (m samples x n features) with labels in {-1, +1}.

    Immutable after construction; the underlying arrays are marked read-only
    so instances can be shared freely across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if features.shape[0] != labels.shape[0]:
            raise DataError(
                f"row count {features.shape[0]} does not match "
                f"label count {labels.shape[0]}"
            )
        if features.shape[0] < 1 or features.shape[1] < 1:
            raise DataError("dataset needs at least one sample and one feature")
        if not np.all(np.isin(labels, (-1, 1))):
            raise DataError("labels must all be -1 or +1")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        """(positive count, negative count)."""
        pos = int(np.count_nonzero(self.labels == 1))
        return pos, self.m - pos

    def subset(self, indices: np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx], name=self.name)


@dataclass(frozen=True, eq=False)
class AugmentedDataset:
    """Dataset whose samples carry one extra trailing coordinate equal to gamma.

    The extra coordinate folds the hyperplane offset into the normal vector,
    so the dual problem has box/lower bounds only.
    """

    base: Dataset
    gamma: float
    features: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.gamma > 0):
            raise DataError(f"gamma must be positive, got {self.gamma}")
        extra = np.full((self.base.m, 1), float(self.gamma))
        features = np.hstack([self.base.features, extra])
        features.setflags(write=False)
        object.__setattr__(self, "features", features)

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def n_augmented(self) -> int:
        return self.base.n + 1


def augment(d: Dataset, gamma: float) -> AugmentedDataset:
    return AugmentedDataset(base=d, gamma=float(gamma))


@dataclass(frozen=True)
class SplitSpec:
    """Train/calibration/test fractions (must sum to 1) plus the shuffle seed."""

    train_fraction: float
    calibration_fraction: float
    test_fraction: float
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_fraction, self.calibration_fraction, self.test_fraction)
        for f in fracs:
            if not (0.0 < f < 1.0):
                raise DataError(f"split fraction {f} outside (0, 1)")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise DataError(f"split fractions sum to {sum(fracs)}, expected 1")
        if self.seed < 0:
            raise DataError("seed must be non-negative")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_fraction, self.calibration_fraction, self.test_fraction)


def load_svmlight(path) -> Dataset:
    """Read `label idx:val ...` lines; '#' comments are stripped.

    Labels 0/-1 map to -1 and +1 stays +1.  Feature indices are 1-based and
    must be strictly increasing within a line; absent indices are zero.
    """
    rows = []
    labels = []
    n = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            try:
                raw_label = float(parts[0])
            except ValueError:
                raise DataError(f"malformed label {parts[0]!r} at line {lineno}") from None
            labels.append(_normalize_label(raw_label, f"at line {lineno}"))
            entries = []
            prev_idx = 0
            for token in parts[1:]:
                idx_s, _, val_s = token.partition(":")
                if not val_s:
                    raise DataError(f"malformed feature {token!r} at line {lineno}")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataError(f"malformed feature {token!r} at line {lineno}") from None
                if idx <= prev_idx:
                    raise DataError(f"non-increasing feature index at line {lineno}")
                prev_idx = idx
                entries.append((idx, val))
            n = max(n, prev_idx)
            rows.append(entries)
    if not rows:
        raise DataError(f"no samples in {path}")
    if n == 0:
        raise DataError(f"no features in {path}")
    features = np.zeros((len(rows), n))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            features[i, idx - 1] = val
    return Dataset(features, np.array(labels), name=str(path))


def save_svmlight(d: Dataset, path) -> None:
    """Write a dataset in svmlight text form.

    Zero values are written out too so that a reload recovers the feature
    count (and hence the matrix) exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(d.m):
            pairs = " ".join(
                f"{j + 1}:{float(d.features[i, j])!r}" for j in range(d.n)
            )
            fh.write(f"{'+1' if d.labels[i] == 1 else '-1'} {pairs}\n")


def load_csv(path, label_column=-1, has_header: bool = False) -> Dataset:
    """Read a rectangular numeric CSV; `label_column` is a header name or index."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"no samples in {path}")

    header = None
    if has_header:
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"no samples in {path}")

    width = len(rows[0])
    if isinstance(label_column, str):
        if header is None:
            raise DataError("label column given by name but the file has no header")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DataError(f"label column {label_column!r} absent from header") from None
    else:
        label_idx = int(label_column)
        if label_idx < 0:
            label_idx += width
        if not (0 <= label_idx < width):
            raise DataError(f"label column index {label_column} out of range")

    features = []
    labels = []
    first_data_line = 2 if has_header else 1
    for r, row in enumerate(rows):
        lineno = r + first_data_line
        if len(row) != width:
            raise DataError(f"ragged row at line {lineno}: {len(row)} cells, expected {width}")
        values = []
        for c, cell in enumerate(row):
            try:
                values.append(float(cell))
            except ValueError:
                raise DataError(
                    f"non-numeric cell {cell.strip()!r} at line {lineno}, column {c + 1}"
                ) from None
        labels.append(_normalize_label(values.pop(label_idx), f"at line {lineno}"))
        features.append(values)
    if width < 2:
        raise DataError("CSV needs at least one feature column besides the labels")
    return Dataset(np.array(features), np.array(labels), name=str(path))


def save_csv(d: Dataset, path, header: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"f{j + 1}" for j in range(d.n)] + ["label"])
        for i in range(d.m):
            writer.writerow([repr(float(v)) for v in d.features[i]] + [int(d.labels[i])])


def _largest_remainder_allocation(count: int, fractions) -> list[int]:
    """Integer allocation of `count` over `fractions`, each within 1 of exact."""
    exact = [count * f for f in fractions]
    base = [math.floor(e) for e in exact]
    leftover = count - sum(base)
    order = sorted(range(len(fractions)), key=lambda j: exact[j] - base[j], reverse=True)
    for j in order[:leftover]:
        base[j] += 1
    return base


def _class_index_lists(labels: np.ndarray):
    # fixed class order (+1 first) keeps seeded shuffling reproducible
    return [np.flatnonzero(labels == 1), np.flatnonzero(labels == -1)]


def stratified_split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Split into (train, calibration, test) preserving class ratios within +-1."""
    parts = 3
    rng = np.random.default_rng(spec.seed)
    part_indices = [[], [], []]
    for cls_idx in _class_index_lists(d.labels):
        if cls_idx.size < parts:
            raise DataError(
                f"class with {cls_idx.size} members cannot be split into {parts} parts"
            )
        shuffled = rng.permutation(cls_idx)
        counts = _largest_remainder_allocation(cls_idx.size, spec.fractions)
        start = 0
        for part, cnt in enumerate(counts):
            part_indices[part].append(shuffled[start:start + cnt])
            start += cnt
    out = []
    for chunks in part_indices:
        idx = np.sort(np.concatenate(chunks))
        out.append(d.subset(idx))
    return tuple(out)


def stratified_kfold(d: Dataset, k: int, seed: int = 0):
    """k disjoint (train_indices, validation_indices) pairs, class-balanced within +-1.

    Each class's indices are shuffled with the seeded generator and dealt
    round-robin into folds, so the assignment is reproducible.
    """
    if k < 2:
        raise DataError(f"k must be at least 2, got {k}")
    folds = [[] for _ in range(k)]
    rng = np.random.default_rng(seed)
    for cls_idx in _class_index_lists(d.labels):
        if cls_idx.size < k:
            raise DataError(f"k={k} exceeds a class count of {cls_idx.size}")
        shuffled = rng.permutation(cls_idx)
        for j, sample in enumerate(shuffled):
            folds[j % k].append(sample)
    all_idx = np.arange(d.m)
    pairs = []
    for fold in folds:
        val = np.sort(np.array(fold, dtype=np.intp))
        train = np.setdiff1d(all_idx, val, assume_unique=True)
        pairs.append((train, val))
    return pairs


def generate_synthetic(
    m: int, n: int, active_fraction: float, separation: float, seed: int = 0
) -> Dataset:
    """Two unit-variance Gaussian clouds with means `separation` apart.

    Stand-in for real activity exports: class counts are exact
    (round(m * active_fraction) actives) and generation is fully seeded.
    """
    if not (0.0 < active_fraction < 1.0):
        raise DataError("active_fraction must lie in (0, 1)")
    if separation < 0:
        raise DataError("separation must be non-negative")
    n_active = int(round(m * active_fraction))
    if n_active == 0 or n_active == m:
        raise DataError(
            f"active_fraction {active_fraction} leaves an empty class for m={m}"
        )
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((m, n))
    offset = separation / 2.0
    features[:n_active, 0] += offset
    features[n_active:, 0] -= offset
    labels = np.concatenate([np.ones(n_active, dtype=int), -np.ones(m - n_active, dtype=int)])
    perm = rng.permutation(m)
    return Dataset(
        features[perm], labels[perm],
        name=f"synthetic(m={m},n={n},af={active_fraction},sep={separation},seed={seed})",
    )


def scale_statistics(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and standard deviation; zero spread maps to std 1."""
    mean = d.features.mean(axis=0)
    std = d.features.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def apply_scaling(d: Dataset, mean: np.ndarray, std: np.ndarray) -> Dataset:
    return Dataset((d.features - mean) / std, d.labels, name=d.name)
