"""Data pipeline walkthrough: synthesize, ingest, filter, and split a log.

Generates a two-community interaction log, round-trips it through a CSV
file, binarizes it, and carves a timestamp leave-k-out split.
"""

import tempfile
from pathlib import Path

from localrec import Schema, leave_k_out_split, load_interactions, preprocess, save_split
from localrec.synthetic import generate_blocked_log, write_interactions_csv

workdir = Path(tempfile.mkdtemp(prefix="localrec-demo-"))

print("=== 1. synthesize a log with two planted communities ===")
log = generate_blocked_log(n_users=120, n_items=60, noise=0.05, seed=7)
print(f"records: {len(log)} (users alternate between opposed popularity profiles)")

csv_path = workdir / "interactions.csv"
write_interactions_csv(log, csv_path)
print(f"wrote {csv_path}")

print("\n=== 2. parse it back under a declared schema ===")
schema = Schema(columns=("user", "item", "timestamp"), delimiter=",", has_header=False)
parsed = load_interactions(csv_path, schema)
print(f"parsed {len(parsed)} records; first: {parsed.records[0]}")

print("\n=== 3. binarize and filter ===")
matrix = preprocess(parsed, min_user_interactions=10)
density = matrix.interaction_count / (matrix.m * matrix.n)
print(f"matrix: {matrix.m} users x {matrix.n} items, density {density:.3f}")
print(f"user u0 row (item indices): {matrix.rows[0][:10]} ...")

print("\n=== 4. hold out the last 5 interactions per user ===")
split = leave_k_out_split(parsed, matrix, k=5)
u = 0
print(f"user u0 train size: {len(split.train.rows[u])}, held-out items: {split.heldout[u]}")
merged = sorted(set(split.train.rows[u]) | set(split.heldout[u]))
assert merged == list(matrix.rows[u]), "round trip: train + heldout == full row"
print("round-trip check passed: train + heldout == preprocessed row")

save_split(split, workdir / "split")
print(f"\nsplit persisted under {workdir / 'split'} (train.csv, heldout.csv, indexmap.csv)")
