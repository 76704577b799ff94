import math

import numpy as np
import pytest

from helpers import matrix_from_dense, prefix_metric_oracle, random_binary_matrix
from localrec.data import SplitDataset
from localrec.ensemble import EnsembleConfig, train_ensemble
from localrec.errors import ConfigError, MetricError
from localrec.evaluation import (
    breakdown_by_activity,
    evaluate_model,
    ndcg_at_n,
    ranked_candidates,
    recall_at_n,
    save_report,
)
from localrec.models import EaseModel
from localrec.neighborhood import KernelConfig


# ---------------------------------------------------------------- recall

def test_recall_perfect():
    assert recall_at_n([4, 2, 9], {4, 2, 9}, 5) == 1.0


def test_recall_no_overlap():
    assert recall_at_n([1, 2, 3], {7, 8}, 3) == 0.0


def test_recall_divides_by_heldout_size():
    ranked = list(range(100))
    heldout = {3, 50, 200, 300, 400}  # 2 of 5 inside the top-100
    assert recall_at_n(ranked, heldout, 100) == pytest.approx(0.4)


def test_recall_empty_heldout_raises():
    with pytest.raises(MetricError):
        recall_at_n([1, 2], set(), 2)


def test_recall_monotone_in_n():
    rng = np.random.default_rng(0)
    for _ in range(50):
        ranked = rng.permutation(30)
        heldout = set(rng.choice(30, size=4, replace=False).tolist())
        values = [recall_at_n(ranked, heldout, n) for n in range(1, 31)]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------- ndcg

def test_ndcg_perfect_ordering():
    assert ndcg_at_n([5, 9, 1, 2], {5, 9}, 4) == pytest.approx(1.0)


def test_ndcg_hand_value():
    # k=2, hits at ranks 1 and 3: (1 + 1/log2(4)) / (1 + 1/log2(3))
    ranked = [10, 0, 11, 1, 2]
    value = ndcg_at_n(ranked, {10, 11}, 5)
    assert value == pytest.approx(1.5 / (1 + 1 / math.log2(3)), abs=1e-9)
    assert value == pytest.approx(0.9197, abs=1e-4)


def test_ndcg_no_hits():
    assert ndcg_at_n([1, 2, 3], {9}, 3) == 0.0


def test_ndcg_ideal_is_one_even_when_k_exceeds_n():
    assert ndcg_at_n([1, 2], {1, 2, 3, 4, 5}, 2) == pytest.approx(1.0)


def test_metrics_ignore_order_below_cutoff():
    rng = np.random.default_rng(1)
    ranked = list(rng.permutation(40))
    heldout = set(rng.choice(40, size=6, replace=False).tolist())
    tail = ranked[10:]
    rng.shuffle(tail)
    permuted = ranked[:10] + tail
    assert recall_at_n(ranked, heldout, 10) == recall_at_n(permuted, heldout, 10)
    assert ndcg_at_n(ranked, heldout, 10) == ndcg_at_n(permuted, heldout, 10)


def test_metrics_match_prefix_oracle():
    rng = np.random.default_rng(2)
    for _ in range(200):
        pool = int(rng.integers(5, 50))
        ranked = rng.permutation(pool)
        k = int(rng.integers(1, 6))
        heldout = set(rng.choice(pool, size=k, replace=False).tolist())
        n = int(rng.integers(1, pool + 3))
        exp_recall, exp_ndcg = prefix_metric_oracle(ranked, heldout, n)
        assert recall_at_n(ranked, heldout, n) == pytest.approx(exp_recall, abs=1e-12)
        assert ndcg_at_n(ranked, heldout, n) == pytest.approx(exp_ndcg, abs=1e-12)


# ---------------------------------------------------------------- evaluate_model

def oracle_split():
    # user u trains on item u and holds out item u+3; B routes u -> u+3
    dense = np.eye(3, 6)
    train = matrix_from_dense(dense)
    heldout = [np.array([u + 3]) for u in range(3)]
    return SplitDataset(train=train, heldout=heldout, k=1)


def test_oracle_model_scores_one():
    split = oracle_split()
    b = np.zeros((6, 6))
    for u in range(3):
        b[u, u + 3] = 1.0
    report = evaluate_model(EaseModel(b=b, lam=1.0), split, n_values=(1, 3))
    for metric in ("recall", "ndcg"):
        for n in (1, 3):
            assert report.means[metric][n] == pytest.approx(1.0)


def test_constant_scores_rank_by_index():
    split = oracle_split()
    report = evaluate_model(EaseModel(b=np.zeros((6, 6)), lam=1.0), split, n_values=(3,))
    # user u's candidates (all items but u) rank as ascending indices, so the
    # held-out item u+3 sits at 0-based position u+2: only user 0 is inside
    # the top-3 cutoff
    got = report.per_user["ndcg"][3]
    np.testing.assert_allclose(got, [1 / math.log2(4), 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(report.per_user["recall"][3], [1.0, 0.0, 0.0], atol=1e-12)


def test_evaluation_is_pure():
    rng = np.random.default_rng(5)
    train = random_binary_matrix(rng, 10, 8)
    heldout = [np.array([int(rng.integers(0, 8))]) for _ in range(10)]
    split = SplitDataset(train=train, heldout=heldout, k=1)
    cfg = EnsembleConfig(q=2, kernel=KernelConfig(1.5, 0.8), lam=1.0, embedding_dim=3)
    model = train_ensemble(split, cfg)
    a = evaluate_model(model, split, n_values=(2, 4))
    b = evaluate_model(model, split, n_values=(2, 4))
    assert a.means == b.means
    assert 0.0 <= a.coverage <= 1.0
    for metric in ("recall", "ndcg"):
        for n in (2, 4):
            np.testing.assert_array_equal(a.per_user[metric][n], b.per_user[metric][n])
            assert np.all((a.per_user[metric][n] >= 0) & (a.per_user[metric][n] <= 1))


def test_evaluate_bare_dae_model():
    from localrec.models import TrainConfig, train_dae

    rng = np.random.default_rng(19)
    train = random_binary_matrix(rng, 8, 6)
    heldout = [np.array([int(rng.integers(0, 6))]) for _ in range(8)]
    split = SplitDataset(train=train, heldout=heldout, k=1)
    model = train_dae(train, np.ones(8), d=2, config=TrainConfig(max_epochs=3, dropout=0.0, seed=1))
    report = evaluate_model(model, split, n_values=(3,))
    assert report.coverage == 0.0  # a bare base model has no local coverage
    assert 0.0 <= report.means["ndcg"][3] <= 1.0


def test_evaluate_requires_heldout():
    train = matrix_from_dense([[1, 0], [0, 1]])
    split = SplitDataset(train=train, heldout=[np.zeros(0, int)] * 2, k=0)
    with pytest.raises(MetricError):
        evaluate_model(EaseModel(b=np.zeros((2, 2)), lam=1.0), split)


def test_evaluate_checks_shapes():
    split = oracle_split()
    cfg = EnsembleConfig(q=0, kernel=KernelConfig(1.0, 0.5), lam=1.0)
    other = train_ensemble(
        SplitDataset(matrix_from_dense(np.eye(4, 5)), [np.zeros(0, int)] * 4, 0), cfg
    )
    with pytest.raises(ConfigError):
        evaluate_model(other, split)
    with pytest.raises(ConfigError):
        evaluate_model(EaseModel(b=np.zeros((4, 4)), lam=1.0), split)


def test_ranked_candidates_excludes_and_orders():
    scores = np.array([0.5, 0.9, 0.5, 0.1])
    got = ranked_candidates(scores, np.array([1]))
    assert list(got) == [0, 2, 3]


# ---------------------------------------------------------------- breakdown

def make_report(train, sizes_scores):
    heldout = [np.array([0]) for _ in range(train.m)]
    split = SplitDataset(train=train, heldout=heldout, k=1)
    b = np.zeros((train.n, train.n))
    return evaluate_model(EaseModel(b=b, lam=1.0), split, n_values=(2,))


def test_breakdown_single_bucket_equals_global_mean():
    rng = np.random.default_rng(7)
    train = random_binary_matrix(rng, 12, 9)
    report = make_report(train, None)
    buckets = breakdown_by_activity(report, train, bucket_edges=[])
    assert len(buckets) == 1
    assert buckets[0]["count"] == 12
    assert buckets[0]["ndcg@2"] == pytest.approx(report.means["ndcg"][2])


def test_breakdown_bucket_assignment():
    rows = np.zeros((3, 25))
    rows[0, :3] = 1
    rows[1, :8] = 1
    rows[2, :20] = 1
    train = matrix_from_dense(rows)
    report = make_report(train, None)
    buckets = breakdown_by_activity(report, train, bucket_edges=[5, 10])
    assert [b["count"] for b in buckets] == [1, 1, 1]
    assert buckets[0]["lo"] == 0 and buckets[0]["hi"] == 5
    assert buckets[2]["hi"] == np.inf


def test_breakdown_flags_empty_buckets():
    train = matrix_from_dense(np.ones((4, 6)))
    report = make_report(train, None)
    buckets = breakdown_by_activity(report, train, bucket_edges=[2, 4])
    assert buckets[2]["count"] == 4
    assert buckets[0]["count"] == 0
    assert math.isnan(buckets[0]["ndcg@2"])


def test_breakdown_validates_edges():
    train = matrix_from_dense(np.ones((2, 3)))
    report = make_report(train, None)
    with pytest.raises(ConfigError):
        breakdown_by_activity(report, train, bucket_edges=[5, 5])


# ---------------------------------------------------------------- persistence

def test_save_report_files(tmp_path):
    split = oracle_split()
    report = evaluate_model(EaseModel(b=np.zeros((6, 6)), lam=1.0), split, n_values=(2,))
    save_report(report, tmp_path)
    table = (tmp_path / "report.csv").read_text().strip().splitlines()
    assert table[0] == "user,metric,N,value"
    assert len(table) == 1 + 2 * 3  # two metrics, three users, one cutoff
    summary = (tmp_path / "summary.txt").read_text()
    assert "mean_recall@2" in summary
    assert "coverage" in summary
