from __future__ import annotations

import csv
import enum
import json
import os
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSpec, TooManyTeachers
from .synthetic import SyntheticSpec, generate_arrays
from .tensorio import load_tensor, save_tensor


class Split(str, enum.Enum):
    FULL = "full"
    PRIVATE_TRAIN = "private_train"
    PUBLIC_POOL = "public_pool"
    TEST = "test"


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split_id: Split = Split.FULL
    provenance: str = ""
    indices: np.ndarray | None = None  # positions in the parent dataset

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise InvalidSpec("images and labels disagree in length")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise InvalidSpec("label outside class range")

    def __len__(self):
        return int(self.labels.shape[0])

    def subset(self, idx, split_id=None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        parent = self.indices if self.indices is not None else np.arange(len(self))
        return Dataset(self.images[idx], self.labels[idx], self.num_classes,
                       split_id or self.split_id, self.provenance, parent[idx])


def generate(spec: SyntheticSpec) -> Dataset:
    images, labels = generate_arrays(spec)
    return Dataset(images, labels, spec.classes, Split.FULL, spec.digest(),
                   np.arange(spec.count))


@dataclass(frozen=True)
class SplitFractions:
    private: float = 0.7
    public: float = 0.2
    test: float = 0.1

    def __post_init__(self):
        vals = (self.private, self.public, self.test)
        if min(vals) <= 0 or abs(sum(vals) - 1.0) > 1e-9:
            raise InvalidSpec(f"split fractions must be positive and sum to 1, got {vals}")


def split(dataset: Dataset, fractions: SplitFractions, seed: int) -> dict[Split, Dataset]:
    """Disjoint private / public-pool / test splits over a seeded permutation."""
    n = len(dataset)
    perm = np.random.default_rng(seed).permutation(n)
    n_priv = int(round(fractions.private * n))
    n_pub = int(round(fractions.public * n))
    if n_priv < 1 or n_pub < 1 or n - n_priv - n_pub < 1:
        raise InvalidSpec(f"dataset of {n} examples too small for the requested splits")
    return {
        Split.PRIVATE_TRAIN: dataset.subset(np.sort(perm[:n_priv]), Split.PRIVATE_TRAIN),
        Split.PUBLIC_POOL: dataset.subset(np.sort(perm[n_priv:n_priv + n_pub]), Split.PUBLIC_POOL),
        Split.TEST: dataset.subset(np.sort(perm[n_priv + n_pub:]), Split.TEST),
    }


@dataclass(frozen=True)
class PartitionPlan:
    num_teachers: int
    assignment: np.ndarray  # example index -> teacher index

    def slice_indices(self, teacher: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == teacher)

    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.num_teachers).tolist()


def partition(dataset_or_size, num_teachers: int, seed: int) -> PartitionPlan:
    """Round-robin deal over a seeded permutation; lower teacher ids take the remainder."""
    n = dataset_or_size if isinstance(dataset_or_size, int) else len(dataset_or_size)
    if num_teachers < 1:
        raise TooManyTeachers("need at least one teacher")
    if num_teachers > n:
        raise TooManyTeachers(f"{num_teachers} teachers but only {n} examples")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % num_teachers
    return PartitionPlan(num_teachers, assignment)


def load_csv(path, dims: tuple[int, int, int], num_classes: int | None = None) -> Dataset:
    """Read a CSV with a header row, one example per row, label in the last column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InvalidSpec(f"{path}: no data rows")
    body = np.asarray([[float(x) for x in r] for r in rows[1:] if r], dtype=np.float64)
    expected = int(np.prod(dims)) + 1
    if body.shape[1] != expected:
        raise InvalidSpec(f"{path}: expected {expected} columns, found {body.shape[1]}")
    labels = body[:, -1].astype(np.int64)
    if not np.all(body[:, -1] == labels):
        raise InvalidSpec(f"{path}: label column must hold integers")
    k = int(labels.max()) + 1 if num_classes is None else num_classes
    images = body[:, :-1].reshape((-1,) + tuple(dims))
    return Dataset(images, labels, k, Split.FULL, f"csv:{os.path.basename(path)}",
                   np.arange(labels.size))


def save_dataset(directory, dataset: Dataset, extra: dict | None = None) -> dict:
    os.makedirs(directory, exist_ok=True)
    save_tensor(os.path.join(directory, "images.ptns"), dataset.images.astype(np.float64))
    save_tensor(os.path.join(directory, "labels.ptns"), dataset.labels.astype(np.uint16))
    manifest = {"num_classes": dataset.num_classes, "count": len(dataset),
                "dims": list(dataset.images.shape[1:]), "split_id": dataset.split_id.value,
                "provenance": dataset.provenance}
    if extra:
        manifest.update(extra)
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_dataset(directory) -> Dataset:
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    images = load_tensor(os.path.join(directory, "images.ptns")).astype(np.float64)
    labels = load_tensor(os.path.join(directory, "labels.ptns")).astype(np.int64)
    return Dataset(images, labels, int(manifest["num_classes"]),
                   Split(manifest.get("split_id", "full")), manifest.get("provenance", ""),
                   np.arange(labels.size))
