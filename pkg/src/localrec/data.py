"""Interaction ingestion, binarization, and timestamp-based leave-k-out splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .errors import ConfigError, DataFormatError, EmptyDatasetError

_COLUMN_NAMES = ("user", "item", "rating", "timestamp")


class Interaction(NamedTuple):
    user: str
    item: str
    rating: float | None = None
    timestamp: int | None = None


@dataclass(frozen=True)
class Schema:
    """Column layout of a delimited interaction file.

    ``columns`` lists the fields in file order. ``user`` and ``item`` are
    mandatory; ``rating`` and ``timestamp`` are optional.
    """

    columns: tuple[str, ...] = _COLUMN_NAMES
    delimiter: str = ","
    has_header: bool = False

    def __post_init__(self):
        for name in self.columns:
            if name not in _COLUMN_NAMES:
                raise ConfigError(
                    f"unknown schema column {name!r}; expected one of {_COLUMN_NAMES}"
                )
        if len(set(self.columns)) != len(self.columns):
            raise ConfigError("schema columns must be unique")
        for required in ("user", "item"):
            if required not in self.columns:
                raise ConfigError(f"schema must include a {required!r} column")


@dataclass
class InteractionLog:
    """Raw (user, item, rating, timestamp) records in file order."""

    records: list[Interaction] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def load_interactions(path: str | Path, schema: Schema = Schema()) -> InteractionLog:
    """Parse a delimited interaction file into an :class:`InteractionLog`.

    Row order is preserved. Malformed rows (wrong field count, unparseable
    rating or timestamp) raise :class:`DataFormatError` with the line number.
    """
    path = Path(path)
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc

    col = {name: i for i, name in enumerate(schema.columns)}
    width = len(schema.columns)
    records: list[Interaction] = []
    with handle:
        reader = csv.reader(handle, delimiter=schema.delimiter)
        rows = enumerate(reader, start=1)
        if schema.has_header:
            next(rows, None)
        for lineno, fields in rows:
            if not fields:  # blank line
                continue
            if len(fields) != width:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {width} fields, found {len(fields)}"
                )
            rating = None
            if "rating" in col:
                try:
                    rating = float(fields[col["rating"]])
                except ValueError as exc:
                    raise DataFormatError(
                        f"{path}: line {lineno}: bad rating {fields[col['rating']]!r}"
                    ) from exc
            timestamp = None
            if "timestamp" in col:
                try:
                    timestamp = int(fields[col["timestamp"]])
                except ValueError as exc:
                    raise DataFormatError(
                        f"{path}: line {lineno}: bad timestamp {fields[col['timestamp']]!r}"
                    ) from exc
            records.append(Interaction(fields[col["user"]], fields[col["item"]], rating, timestamp))
    return InteractionLog(records)


@dataclass
class RatingMatrix:
    """Sparse binary user-item matrix with token <-> dense index maps.

    ``rows[u]`` holds the strictly increasing item indices user ``u``
    interacted with. Instances are treated as immutable once built.
    """

    m: int
    n: int
    rows: list[np.ndarray]
    user_tokens: list[str]
    item_tokens: list[str]
    user_index: dict[str, int]
    item_index: dict[str, int]

    @property
    def interaction_count(self) -> int:
        return sum(len(r) for r in self.rows)

    def row_vector(self, u: int) -> np.ndarray:
        """Dense binary rating vector of user ``u`` (length n, float64)."""
        vec = np.zeros(self.n)
        vec[self.rows[u]] = 1.0
        return vec

    def to_csr(self) -> sparse.csr_matrix:
        """Dense-index CSR view (float64) of the binary matrix."""
        indptr = np.zeros(self.m + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r) for r in self.rows])
        indices = (
            np.concatenate(self.rows)
            if self.rows and indptr[-1] > 0
            else np.zeros(0, dtype=np.int64)
        )
        data = np.ones(len(indices))
        return sparse.csr_matrix((data, indices, indptr), shape=(self.m, self.n))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.n))
        for u, items in enumerate(self.rows):
            out[u, items] = 1.0
        return out


def _collapse_duplicates(log: InteractionLog) -> dict[tuple[str, str], tuple[tuple, Interaction]]:
    """Keep one record per (user, item): latest timestamp, file order on ties.

    Records without a timestamp sort below any timestamped record for the
    same pair.
    """
    kept: dict[tuple[str, str], tuple[tuple, Interaction]] = {}
    for pos, rec in enumerate(log.records):
        ts = rec.timestamp if rec.timestamp is not None else float("-inf")
        key = (ts, pos)
        pair = (rec.user, rec.item)
        if pair not in kept or key > kept[pair][0]:
            kept[pair] = (key, rec)
    return kept


def preprocess(
    log: InteractionLog,
    min_user_interactions: int = 10,
    positive_threshold: float | str = "all",
) -> RatingMatrix:
    """Binarize an interaction log into a :class:`RatingMatrix`.

    Duplicate (user, item) pairs collapse to the latest-timestamp record,
    then ratings below ``positive_threshold`` are dropped (``"all"`` keeps
    everything), then users with fewer than ``min_user_interactions``
    surviving interactions are removed. Dense indices follow the first
    appearance of surviving tokens in file order.
    """
    if min_user_interactions < 1:
        raise ConfigError(f"min_user_interactions must be >= 1, got {min_user_interactions}")
    threshold = None
    if positive_threshold != "all":
        threshold = float(positive_threshold)

    kept = _collapse_duplicates(log)
    if threshold is not None:
        for (_, rec) in kept.values():
            if rec.rating is None:
                raise ConfigError("positive_threshold requires a rating column")
        kept = {p: v for p, v in kept.items() if v[1].rating >= threshold}

    counts: dict[str, int] = {}
    for user, _ in kept:
        counts[user] = counts.get(user, 0) + 1
    surviving = {
        pair for pair in kept if counts[pair[0]] >= min_user_interactions
    }
    if not surviving:
        raise EmptyDatasetError(
            f"no users left after preprocessing (min_user_interactions={min_user_interactions})"
        )

    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    user_tokens: list[str] = []
    item_tokens: list[str] = []
    row_sets: list[set[int]] = []
    seen_pairs: set[tuple[str, str]] = set()
    for rec in log.records:
        pair = (rec.user, rec.item)
        if pair not in surviving or pair in seen_pairs:
            continue
        seen_pairs.add(pair)
        if rec.user not in user_index:
            user_index[rec.user] = len(user_tokens)
            user_tokens.append(rec.user)
            row_sets.append(set())
        if rec.item not in item_index:
            item_index[rec.item] = len(item_tokens)
            item_tokens.append(rec.item)
        row_sets[user_index[rec.user]].add(item_index[rec.item])

    rows = [np.array(sorted(s), dtype=np.int64) for s in row_sets]
    return RatingMatrix(
        m=len(user_tokens),
        n=len(item_tokens),
        rows=rows,
        user_tokens=user_tokens,
        item_tokens=item_tokens,
        user_index=user_index,
        item_index=item_index,
    )


@dataclass
class SplitDataset:
    """Train matrix plus per-user held-out items (the last k by timestamp)."""

    train: RatingMatrix
    heldout: list[np.ndarray]
    k: int


def leave_k_out_split(log: InteractionLog, matrix: RatingMatrix, k: int = 5) -> SplitDataset:
    """Hold out each user's k latest interactions for evaluation.

    Timestamp ties at the boundary are broken by holding out the larger item
    index, so splits are deterministic. Requires every user to have more
    than ``k`` interactions.
    """
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k == 0:
        empty = [np.zeros(0, dtype=np.int64) for _ in range(matrix.m)]
        return SplitDataset(train=matrix, heldout=empty, k=0)

    latest = _collapse_duplicates(log)
    train_rows: list[np.ndarray] = []
    heldout: list[np.ndarray] = []
    for u in range(matrix.m):
        items = matrix.rows[u]
        if len(items) <= k:
            raise ConfigError(
                f"user {matrix.user_tokens[u]!r} has {len(items)} interactions; "
                f"need more than k={k} to split"
            )
        stamps = np.empty(len(items), dtype=np.int64)
        for pos, i in enumerate(items):
            key, rec = latest[(matrix.user_tokens[u], matrix.item_tokens[i])]
            if rec.timestamp is None:
                raise ConfigError(
                    f"user {matrix.user_tokens[u]!r} item {matrix.item_tokens[i]!r} "
                    "has no timestamp; leave-k-out needs a timestamp column"
                )
            stamps[pos] = rec.timestamp
        order = np.lexsort((items, stamps))  # timestamp asc, then item index asc
        heldout.append(items[order[-k:]])
        train_rows.append(np.sort(items[order[:-k]]))

    train = RatingMatrix(
        m=matrix.m,
        n=matrix.n,
        rows=train_rows,
        user_tokens=matrix.user_tokens,
        item_tokens=matrix.item_tokens,
        user_index=matrix.user_index,
        item_index=matrix.item_index,
    )
    return SplitDataset(train=train, heldout=heldout, k=k)


def save_split(split: SplitDataset, out_dir: str | Path) -> None:
    """Persist a split as train/heldout pair files plus one token index map."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train = split.train

    with open(out_dir / "train.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "item"])
        for u, items in enumerate(train.rows):
            for i in items:
                writer.writerow([u, int(i)])

    with open(out_dir / "heldout.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "item"])
        for u, items in enumerate(split.heldout):
            for i in items:
                writer.writerow([u, int(i)])

    with open(out_dir / "indexmap.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "token", "index"])
        for idx, tok in enumerate(train.user_tokens):
            writer.writerow(["user", tok, idx])
        for idx, tok in enumerate(train.item_tokens):
            writer.writerow(["item", tok, idx])


def load_split(in_dir: str | Path) -> SplitDataset:
    """Load a split previously written by :func:`save_split`."""
    in_dir = Path(in_dir)
    user_tokens: list[str] = []
    item_tokens: list[str] = []
    try:
        with open(in_dir / "indexmap.csv", newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for kind, token, index in reader:
                target = user_tokens if kind == "user" else item_tokens
                if int(index) != len(target):
                    raise DataFormatError(f"{in_dir}/indexmap.csv: non-contiguous {kind} indices")
                target.append(token)
    except OSError as exc:
        raise DataFormatError(f"cannot read split from {in_dir}: {exc}") from exc

    m, n = len(user_tokens), len(item_tokens)

    def read_pairs(name: str) -> list[list[int]]:
        per_user: list[list[int]] = [[] for _ in range(m)]
        with open(in_dir / name, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for lineno, row in enumerate(reader, start=2):
                try:
                    u, i = int(row[0]), int(row[1])
                    if not (0 <= u < m and 0 <= i < n):
                        raise ValueError("index out of range")
                except (ValueError, IndexError) as exc:
                    raise DataFormatError(f"{in_dir}/{name}: line {lineno}: {exc}") from exc
                per_user[u].append(i)
        return per_user

    train_rows = [np.array(sorted(set(items)), dtype=np.int64) for items in read_pairs("train.csv")]
    held_lists = read_pairs("heldout.csv")
    sizes = {len(h) for h in held_lists}
    if len(sizes) > 1:
        raise DataFormatError(f"{in_dir}/heldout.csv: users have unequal held-out sizes {sorted(sizes)}")
    k = sizes.pop() if sizes else 0
    heldout = [np.array(h, dtype=np.int64) for h in held_lists]

    train = RatingMatrix(
        m=m,
        n=n,
        rows=train_rows,
        user_tokens=user_tokens,
        item_tokens=item_tokens,
        user_index={t: i for i, t in enumerate(user_tokens)},
        item_index={t: i for i, t in enumerate(item_tokens)},
    )
    return SplitDataset(train=train, heldout=heldout, k=k)
