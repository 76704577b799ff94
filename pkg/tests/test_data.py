import numpy as np
import pytest

from localrec.data import (
    Interaction,
    InteractionLog,
    Schema,
    leave_k_out_split,
    load_interactions,
    load_split,
    preprocess,
    save_split,
)
from localrec.errors import ConfigError, DataFormatError, EmptyDatasetError


def make_log(triples):
    """triples: (user, item, rating, ts) or (user, item, ts)."""
    records = []
    for t in triples:
        if len(t) == 3:
            records.append(Interaction(t[0], t[1], None, t[2]))
        else:
            records.append(Interaction(*t))
    return InteractionLog(records)


# ---------------------------------------------------------------- loading

def test_load_basic(tmp_path):
    f = tmp_path / "log.csv"
    f.write_text("u1,i1,5,100\nu1,i2,4,200\nu2,i1,3,150\n")
    log = load_interactions(f)
    assert len(log) == 3
    assert log.records[0] == Interaction("u1", "i1", 5.0, 100)
    assert log.records[2] == Interaction("u2", "i1", 3.0, 150)


def test_load_empty_file(tmp_path):
    f = tmp_path / "log.csv"
    f.write_text("")
    assert len(load_interactions(f)) == 0


def test_load_arity_error_reports_line(tmp_path):
    f = tmp_path / "log.csv"
    f.write_text("u1,i1\n")
    with pytest.raises(DataFormatError, match="line 1"):
        load_interactions(f)


def test_load_header_and_delimiter(tmp_path):
    f = tmp_path / "log.tsv"
    f.write_text("user\titem\tts\nu1\ti1\t10\n")
    schema = Schema(columns=("user", "item", "timestamp"), delimiter="\t", has_header=True)
    log = load_interactions(f, schema)
    assert log.records == [Interaction("u1", "i1", None, 10)]


def test_load_bad_timestamp(tmp_path):
    f = tmp_path / "log.csv"
    f.write_text("u1,i1,5,abc\n")
    with pytest.raises(DataFormatError, match="line 1"):
        load_interactions(f)


def test_load_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_interactions(tmp_path / "absent.csv")


def test_schema_rejects_unknown_column():
    with pytest.raises(ConfigError):
        Schema(columns=("user", "item", "score"))


# ---------------------------------------------------------------- preprocess

def test_preprocess_removes_sparse_users():
    recs = [("u1", f"i{j}", j) for j in range(9)]  # 9 interactions
    recs += [("u2", f"i{j}", j) for j in range(10)]
    mat = preprocess(make_log(recs), min_user_interactions=10)
    assert mat.m == 1
    assert "u1" not in mat.user_index
    assert mat.user_tokens == ["u2"]


def test_preprocess_no_filtering():
    mat = preprocess(make_log([("u1", "i1", 1), ("u2", "i2", 2)]), min_user_interactions=1)
    assert mat.m == 2
    assert mat.n == 2
    assert all(len(r) == 1 for r in mat.rows)


def test_preprocess_positive_threshold():
    # one user, ratings {3, 5}: only the rating-5 interaction survives
    log = make_log([("u1", "a", 3.0, 1), ("u1", "b", 5.0, 2)])
    mat = preprocess(log, min_user_interactions=1, positive_threshold=4)
    assert mat.m == 1
    assert mat.item_tokens == ["b"]
    assert list(mat.rows[0]) == [0]


def test_preprocess_threshold_needs_ratings():
    with pytest.raises(ConfigError):
        preprocess(make_log([("u1", "a", 1)]), min_user_interactions=1, positive_threshold=4)


def test_preprocess_duplicates_keep_latest():
    # duplicate pair: the ts=5 record (rating 2.0) wins over ts=1 (rating 9.0)
    log = make_log([("u1", "a", 9.0, 1), ("u1", "a", 2.0, 5), ("u1", "b", 9.0, 3)])
    mat = preprocess(log, min_user_interactions=1, positive_threshold=5)
    assert mat.item_tokens == ["b"]


def test_preprocess_first_appearance_indexing():
    log = make_log([("u2", "x", 1), ("u1", "y", 2), ("u2", "y", 3), ("u1", "x", 4)])
    mat = preprocess(log, min_user_interactions=1)
    assert mat.user_tokens == ["u2", "u1"]
    assert mat.item_tokens == ["x", "y"]


def test_preprocess_empty_raises():
    with pytest.raises(EmptyDatasetError):
        preprocess(make_log([("u1", "i1", 1)]), min_user_interactions=2)
    with pytest.raises(EmptyDatasetError):
        preprocess(InteractionLog([]), min_user_interactions=1)


def test_preprocess_monotone_in_min_interactions():
    rng = np.random.default_rng(42)
    recs = []
    for u in range(20):
        for i in rng.choice(30, size=rng.integers(1, 15), replace=False):
            recs.append((f"u{u}", f"i{i}", int(rng.integers(0, 1000))))
    log = make_log(recs)
    sizes = []
    for lo in range(1, 12):
        try:
            sizes.append(preprocess(log, min_user_interactions=lo).m)
        except EmptyDatasetError:
            sizes.append(0)
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_preprocess_deterministic():
    recs = [("u1", f"i{j}", j) for j in range(12)] + [("u3", f"i{j}", j) for j in range(4, 16)]
    a = preprocess(make_log(recs), min_user_interactions=10)
    b = preprocess(make_log(recs), min_user_interactions=10)
    assert a.user_index == b.user_index
    assert a.item_index == b.item_index
    assert all(np.array_equal(x, y) for x, y in zip(a.rows, b.rows))


# ---------------------------------------------------------------- splitting

def test_split_last_k_by_timestamp():
    recs = [("u1", f"i{j}", 10 * (j + 1)) for j in range(8)]  # ts 10..80
    log = make_log(recs)
    mat = preprocess(log, min_user_interactions=1)
    split = leave_k_out_split(log, mat, k=5)
    held_tokens = {mat.item_tokens[i] for i in split.heldout[0]}
    assert held_tokens == {"i3", "i4", "i5", "i6", "i7"}
    train_tokens = {mat.item_tokens[i] for i in split.train.rows[0]}
    assert train_tokens == {"i0", "i1", "i2"}


def test_split_k_zero():
    log = make_log([("u1", "a", 1), ("u1", "b", 2)])
    mat = preprocess(log, min_user_interactions=1)
    split = leave_k_out_split(log, mat, k=0)
    assert split.k == 0
    assert len(split.heldout[0]) == 0
    assert np.array_equal(split.train.rows[0], mat.rows[0])


def test_split_tie_breaks_by_larger_item_index():
    # i1 and i2 tie at ts=2; the larger item index is held out
    log = make_log([("u1", "i0", 1), ("u1", "i1", 2), ("u1", "i2", 2)])
    mat = preprocess(log, min_user_interactions=1)
    split = leave_k_out_split(log, mat, k=1)
    assert mat.item_tokens[split.heldout[0][0]] == "i2"
    split2 = leave_k_out_split(log, mat, k=2)
    held = {mat.item_tokens[i] for i in split2.heldout[0]}
    assert held == {"i1", "i2"}


def test_split_requires_enough_interactions():
    log = make_log([("u1", "a", 1), ("u1", "b", 2)])
    mat = preprocess(log, min_user_interactions=1)
    with pytest.raises(ConfigError, match="u1"):
        leave_k_out_split(log, mat, k=2)


def test_split_requires_timestamps():
    log = InteractionLog([Interaction("u1", "a"), Interaction("u1", "b")])
    mat = preprocess(log, min_user_interactions=1)
    with pytest.raises(ConfigError, match="timestamp"):
        leave_k_out_split(log, mat, k=1)


def test_split_round_trip_property():
    rng = np.random.default_rng(7)
    recs = []
    for u in range(15):
        items = rng.choice(40, size=rng.integers(8, 20), replace=False)
        for i in items:
            recs.append((f"u{u}", f"i{i}", int(rng.integers(0, 10_000))))
    log = make_log(recs)
    mat = preprocess(log, min_user_interactions=8)
    split = leave_k_out_split(log, mat, k=5)
    for u in range(mat.m):
        merged = np.sort(np.concatenate([split.train.rows[u], split.heldout[u]]))
        assert np.array_equal(merged, mat.rows[u])
        assert len(np.intersect1d(split.train.rows[u], split.heldout[u])) == 0
        assert len(split.heldout[u]) == 5


def test_to_csr_matches_rows():
    log = make_log([("u1", "a", 1), ("u1", "b", 2), ("u2", "b", 3)])
    mat = preprocess(log, min_user_interactions=1)
    dense = mat.to_csr().toarray()
    assert dense.shape == (2, 2)
    np.testing.assert_array_equal(dense, mat.to_dense())
    assert dense.sum() == 3


# ---------------------------------------------------------------- persistence

def test_load_split_rejects_corrupt_rows(tmp_path):
    log = make_log([("u1", "a", 1), ("u1", "b", 2)])
    mat = preprocess(log, min_user_interactions=1)
    split = leave_k_out_split(log, mat, k=0)
    save_split(split, tmp_path / "split")
    train_file = tmp_path / "split" / "train.csv"
    train_file.write_text(train_file.read_text() + "9,0\n")  # user 9 does not exist
    with pytest.raises(DataFormatError, match="train.csv"):
        load_split(tmp_path / "split")


def test_split_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    recs = []
    for u in range(6):
        items = rng.choice(12, size=rng.integers(7, 12), replace=False)
        for i in items:
            recs.append((f"user-{u}", f"item,{i}", int(rng.integers(0, 500))))
    log = make_log(recs)
    mat = preprocess(log, min_user_interactions=7)
    split = leave_k_out_split(log, mat, k=5)

    save_split(split, tmp_path / "split")
    loaded = load_split(tmp_path / "split")

    assert loaded.k == 5
    assert loaded.train.m == split.train.m
    assert loaded.train.n == split.train.n
    assert loaded.train.user_tokens == split.train.user_tokens
    assert loaded.train.item_tokens == split.train.item_tokens
    for u in range(split.train.m):
        assert np.array_equal(loaded.train.rows[u], split.train.rows[u])
        assert set(loaded.heldout[u]) == set(split.heldout[u])
