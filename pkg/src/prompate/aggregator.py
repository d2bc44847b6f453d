"""Confident-GNMax aggregation over a teacher ensemble.

A query is answered only when the noisy top vote clears the threshold;
the answer is then the argmax of independently noised vote counts.
Noise for query ``i`` comes from its own generator keyed on ``i`` so the
outcome never depends on how teacher predictions were scheduled.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .accountant import PrivacyLedger
from .errors import (
    ClassIndexOutOfRange,
    EmptyEnsemble,
    EmptyPredictions,
    QueryBudgetExceedsPool,
)
from .seeding import derive_seed


@dataclass(frozen=True)
class GnMaxParams:
    threshold: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("noise scales must be nonnegative")


@dataclass(frozen=True)
class AggregateOutcome:
    """``label`` is None for an abstention."""

    label: int | None

    @property
    def answered(self) -> bool:
        return self.label is not None


ABSTAINED = AggregateOutcome(None)


def tally(predictions: Sequence[int], num_classes: int) -> np.ndarray:
    """Vote histogram of ``predictions`` over ``num_classes`` classes."""
    preds = np.asarray(predictions, dtype=np.int64).ravel()
    if preds.size == 0:
        raise EmptyPredictions("no teacher predictions to tally")
    if num_classes < 2:
        raise ValueError("need at least two target classes")
    if preds.min() < 0 or preds.max() >= num_classes:
        raise ClassIndexOutOfRange(
            f"prediction outside [0, {num_classes}): {preds.min()}..{preds.max()}")
    return np.bincount(preds, minlength=num_classes)


def confident_gnmax(hist: np.ndarray, params: GnMaxParams,
                    rng: np.random.Generator) -> AggregateOutcome:
    """One Confident-GNMax release.

    Consumes exactly ``1 + len(hist)`` standard normals from ``rng`` whether
    or not the query is answered. Ties in the noisy argmax go to the lowest
    class index.
    """
    counts = np.asarray(hist, dtype=np.float64)
    draws = rng.standard_normal(1 + counts.size)
    if counts.max() + params.sigma1 * draws[0] < params.threshold:
        return ABSTAINED
    noisy = counts + params.sigma2 * draws[1:]
    return AggregateOutcome(int(np.argmax(noisy)))


def query_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, "gnmax", index))


@dataclass
class LabeledQueries:
    indices: np.ndarray
    labels: np.ndarray
    queries: int
    answered_queries: int
    answer_accuracy: float | None
    teacher_accuracy: float | None = None  # mean single-teacher accuracy on queries

    @property
    def metrics(self) -> dict:
        return {
            "queries": self.queries,
            "answered_queries": self.answered_queries,
            "answer_accuracy": self.answer_accuracy,
            "teacher_accuracy": self.teacher_accuracy,
        }


def ensemble_votes(teachers: Sequence, images: np.ndarray, num_classes: int,
                   workers: int = 1) -> np.ndarray:
    """Per-query vote histograms, shape (N, num_classes).

    Teacher predictions may run on a thread pool; the tally is assembled in
    teacher order afterwards so the result does not depend on ``workers``.
    """
    if len(teachers) == 0:
        raise EmptyEnsemble("teacher ensemble is empty")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            preds = list(pool.map(lambda t: t.predict(images), teachers))
    else:
        preds = [t.predict(images) for t in teachers]
    votes = np.zeros((images.shape[0], num_classes), dtype=np.int64)
    rows = np.arange(images.shape[0])
    for p in preds:
        p = np.asarray(p, dtype=np.int64)
        if p.min(initial=0) < 0 or p.max(initial=0) >= num_classes:
            raise ClassIndexOutOfRange("teacher predicted an unknown class")
        np.add.at(votes, (rows, p), 1)
    return votes


def label_query_pool(
    pool_images: np.ndarray,
    teachers: Sequence,
    params: GnMaxParams,
    max_queries: int,
    ledger: PrivacyLedger,
    seed: int,
    num_classes: int,
    true_labels: np.ndarray | None = None,
    workers: int = 1,
    audit_path=None,
) -> LabeledQueries:
    """Privately label the first ``max_queries`` pool items.

    Ground-truth ``true_labels`` feed the answer-accuracy metric only.
    The ledger is updated in place, one check per query.
    """
    if len(teachers) == 0:
        raise EmptyEnsemble("teacher ensemble is empty")
    if max_queries > pool_images.shape[0]:
        raise QueryBudgetExceedsPool(
            f"max_queries={max_queries} exceeds pool size {pool_images.shape[0]}")
    if max_queries <= 0:
        return LabeledQueries(np.zeros(0, np.int64), np.zeros(0, np.int64), 0, 0, None)

    votes = ensemble_votes(teachers, pool_images[:max_queries], num_classes, workers)
    indices, labels, records = [], [], []
    for i in range(max_queries):
        outcome = confident_gnmax(votes[i], params, query_rng(seed, i))
        ledger.record(outcome.answered)
        records.append({"query_index": i,
                        "outcome": "answered" if outcome.answered else "abstained",
                        "label": outcome.label})
        if outcome.answered:
            indices.append(i)
            labels.append(outcome.label)
    indices = np.asarray(indices, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    accuracy = teacher_accuracy = None
    if true_labels is not None:
        truth = np.asarray(true_labels)[:max_queries]
        # Votes for the true class, summed over queries, count correct teacher answers.
        teacher_accuracy = float(votes[np.arange(max_queries), truth].sum()
                                 / (len(teachers) * max_queries))
        if indices.size:
            accuracy = float(np.mean(labels == truth[indices]))
    if audit_path is not None:
        write_audit(audit_path, records)
    return LabeledQueries(indices, labels, max_queries, int(indices.size), accuracy,
                          teacher_accuracy)


def write_audit(path, records: Iterable[dict]) -> None:
    """JSONL audit stream: released outcomes only, never vote counts."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
