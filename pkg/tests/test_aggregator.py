import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom, norm

from prompate.accountant import PrivacyLedger
from prompate.aggregator import (
    GnMaxParams,
    confident_gnmax,
    ensemble_votes,
    label_query_pool,
    query_rng,
    tally,
)
from prompate.errors import (
    ClassIndexOutOfRange,
    EmptyEnsemble,
    EmptyPredictions,
    QueryBudgetExceedsPool,
)


class FixedTeacher:
    """Returns a precomputed label per pool item (pool items are their own index)."""

    def __init__(self, labels):
        self.labels = np.asarray(labels)

    def predict(self, images):
        return self.labels[images[:, 0].astype(int)]


def pool(n):
    return np.arange(n, dtype=np.float64)[:, None]


def test_tally_examples():
    assert tally([0, 0, 1], 2).tolist() == [2, 1]
    assert tally([2], 3).tolist() == [0, 0, 1]


def test_tally_errors():
    with pytest.raises(EmptyPredictions):
        tally([], 3)
    with pytest.raises(ClassIndexOutOfRange):
        tally([0, 3], 3)
    with pytest.raises(ClassIndexOutOfRange):
        tally([-1], 3)


def test_tally_uniform_counts_within_binomial_bound():
    preds = np.random.default_rng(0).integers(0, 10, 1000)
    counts = tally(preds, 10)
    assert counts.sum() == 1000
    sd = math.sqrt(binom.var(1000, 0.1))
    assert np.all(np.abs(counts - 100) <= 5 * sd)


@given(st.lists(st.integers(0, 6), min_size=1, max_size=200))
def test_tally_preserves_sum(preds):
    counts = tally(preds, 7)
    assert counts.sum() == len(preds)
    assert all(counts[j] == preds.count(j) for j in range(7))


def test_noiseless_answer_and_abstain():
    rng = np.random.default_rng(0)
    assert confident_gnmax(np.array([10, 0, 0]), GnMaxParams(5, 0, 0), rng).label == 0
    assert not confident_gnmax(np.array([3, 3, 3]), GnMaxParams(100, 0, 0), rng).answered


def test_tie_break_lowest_index():
    rng = np.random.default_rng(1)
    for _ in range(50):
        assert confident_gnmax(np.array([5, 5]), GnMaxParams(0, 0, 0), rng).label == 0


def test_consumes_fixed_number_of_draws():
    hist = np.array([1, 2, 3, 4])
    for threshold in (0.0, 1e9):  # answered and abstained
        a, b = np.random.default_rng(7), np.random.default_rng(7)
        confident_gnmax(hist, GnMaxParams(threshold, 3.0, 3.0), a)
        b.standard_normal(1 + hist.size)
        assert a.standard_normal() == b.standard_normal()


def test_answer_probability_matches_normal_difference():
    rng = np.random.default_rng(2024)
    params = GnMaxParams(-1e9, 0.0, 20.0)
    hist = np.array([60, 40])
    trials = 100_000
    hits = sum(confident_gnmax(hist, params, rng).label == 0 for _ in range(trials))
    expected = norm.cdf(20.0 / (20.0 * math.sqrt(2.0)))
    assert expected == pytest.approx(0.7602, abs=1e-4)
    assert hits / trials == pytest.approx(expected, abs=0.01)


def test_gate_pass_rate_at_threshold_is_half():
    rng = np.random.default_rng(99)
    params = GnMaxParams(50.0, 200.0, 1.0)
    hist = np.array([50, 10, 3])
    trials = 100_000
    passed = sum(confident_gnmax(hist, params, rng).answered for _ in range(trials))
    assert passed / trials == pytest.approx(0.5, abs=0.005)


@settings(max_examples=40, deadline=None)
@given(hist=st.lists(st.integers(0, 30), min_size=2, max_size=6),
       t_low=st.floats(-10, 40), dt=st.floats(0, 40), seed=st.integers(0, 2**32))
def test_raising_threshold_never_creates_answers(hist, t_low, dt, seed):
    hist = np.array(hist)
    low = confident_gnmax(hist, GnMaxParams(t_low, 4.0, 4.0), np.random.default_rng(seed))
    high = confident_gnmax(hist, GnMaxParams(t_low + dt, 4.0, 4.0), np.random.default_rng(seed))
    if not low.answered:
        assert not high.answered
    if high.answered:
        assert high.label == low.label


@given(hist=st.lists(st.integers(0, 30), min_size=2, max_size=6), threshold=st.integers(0, 40))
def test_zero_noise_is_gated_exact_argmax(hist, threshold):
    hist = np.array(hist)
    out = confident_gnmax(hist, GnMaxParams(threshold, 0.0, 0.0), np.random.default_rng(0))
    if hist.max() >= threshold:
        assert out.label == int(np.argmax(hist))
    else:
        assert not out.answered


def test_label_query_pool_zero_queries():
    ledger = PrivacyLedger(sigma1=1.0, sigma2=1.0)
    out = label_query_pool(pool(5), [FixedTeacher([0] * 5)], GnMaxParams(1, 1, 1), 0,
                           ledger, seed=0, num_classes=2)
    assert out.queries == 0 and out.labels.size == 0
    assert ledger.threshold_checks == 0


def test_label_query_pool_unanimous_teachers():
    truth = np.array([0, 1, 2, 1, 0, 2, 2, 1])
    teachers = [FixedTeacher(truth) for _ in range(5)]
    ledger = PrivacyLedger(sigma1=1.0, sigma2=1.0)
    out = label_query_pool(pool(8), teachers, GnMaxParams(3, 0, 0), 8, ledger,
                           seed=3, num_classes=3, true_labels=truth)
    assert out.answered_queries == out.queries == 8
    assert out.answer_accuracy == 1.0
    assert out.labels.tolist() == truth.tolist()
    assert (ledger.threshold_checks, ledger.answered) == (8, 8)


def test_label_query_pool_errors():
    ledger = PrivacyLedger()
    with pytest.raises(EmptyEnsemble):
        label_query_pool(pool(3), [], GnMaxParams(1, 1, 1), 1, ledger, 0, 2)
    with pytest.raises(QueryBudgetExceedsPool):
        label_query_pool(pool(3), [FixedTeacher([0, 0, 0])], GnMaxParams(1, 1, 1), 4,
                         ledger, 0, 2)


def test_outcomes_independent_of_worker_count():
    rng = np.random.default_rng(5)
    truth = rng.integers(0, 4, 300)
    teachers = [FixedTeacher(np.where(rng.random(300) < 0.7, truth, rng.integers(0, 4, 300)))
                for _ in range(12)]
    params = GnMaxParams(6.0, 2.0, 1.5)
    results = []
    for workers in (1, 2, 8):
        ledger = PrivacyLedger(sigma1=2.0, sigma2=1.5)
        out = label_query_pool(pool(300), teachers, params, 300, ledger, seed=11,
                               num_classes=4, true_labels=truth, workers=workers)
        results.append((out.indices.tolist(), out.labels.tolist(), ledger.answered))
    assert results[0] == results[1] == results[2]


def test_query_stream_keyed_by_index():
    a = query_rng(5, 17).standard_normal(3)
    b = query_rng(5, 17).standard_normal(3)
    c = query_rng(5, 18).standard_normal(3)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_ensemble_votes_rows_sum_to_teacher_count():
    teachers = [FixedTeacher([0, 1, 1]), FixedTeacher([1, 1, 0]), FixedTeacher([2, 1, 0])]
    votes = ensemble_votes(teachers, pool(3), 3)
    assert votes.tolist() == [[1, 1, 1], [0, 3, 0], [2, 1, 0]]


def test_audit_file_has_no_vote_counts(tmp_path):
    truth = np.array([0, 1, 0, 1])
    path = tmp_path / "audit.jsonl"
    label_query_pool(pool(4), [FixedTeacher(truth)] * 3, GnMaxParams(2.5, 0, 0), 4,
                     PrivacyLedger(), seed=0, num_classes=2, audit_path=path)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["query_index"] for r in records] == [0, 1, 2, 3]
    assert all(set(r) == {"query_index", "outcome", "label"} for r in records)
    assert [r["label"] for r in records] == truth.tolist()
