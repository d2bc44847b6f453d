"""Synthetic datasets, splits, teacher partitioning and tensor files."""

from .datasets import (
    Dataset,
    PartitionPlan,
    Split,
    SplitFractions,
    generate,
    load_csv,
    load_dataset,
    partition,
    save_dataset,
    split,
)
from .synthetic import FAMILIES, SyntheticSpec, class_mean_distance, generate_arrays
from .tensorio import decode_tensor, encode_tensor, load_tensor, save_tensor

__all__ = [
    "Dataset", "FAMILIES", "PartitionPlan", "Split", "SplitFractions", "SyntheticSpec",
    "class_mean_distance", "decode_tensor", "encode_tensor", "generate",
    "generate_arrays", "load_csv", "load_dataset", "load_tensor", "partition",
    "save_dataset", "save_tensor", "split",
]
