"""Base recommenders under per-user weights: closed-form EASE and the DAE.

Trains both model families on a toy matrix, shows that zeroing a user's
weight is the same as deleting the row, and inspects score vectors.
"""

import numpy as np

from localrec import TrainConfig, score_dae, score_ease, train_dae, train_ease
from localrec.data import RatingMatrix


def matrix_from_dense(dense):
    dense = np.asarray(dense, dtype=float)
    m, n = dense.shape
    return RatingMatrix(
        m=m,
        n=n,
        rows=[np.flatnonzero(dense[u]).astype(np.int64) for u in range(m)],
        user_tokens=[f"u{u}" for u in range(m)],
        item_tokens=[f"i{i}" for i in range(n)],
        user_index={f"u{u}": u for u in range(m)},
        item_index={f"i{i}": i for i in range(n)},
    )


dense = np.array(
    [
        [1, 1, 0, 0, 1],
        [1, 1, 1, 0, 0],
        [0, 1, 1, 1, 0],
        [0, 0, 1, 1, 1],
        [1, 0, 0, 1, 1],
    ],
    dtype=float,
)
matrix = matrix_from_dense(dense)

print("=== 1. closed-form EASE ===")
model = train_ease(matrix, row_weights=np.ones(5), lam=1.0)
print("item-item matrix B (diagonal is exactly zero):")
print(np.round(model.b, 3))
r = dense[0]
print(f"user 0 row {r} -> scores {np.round(score_ease(model, r), 3)}")

print("\n=== 2. per-user weights: weight 0 == row deleted ===")
weights = np.array([1.0, 1.0, 0.0, 1.0, 1.0])
weighted = train_ease(matrix, weights, lam=1.0)
reduced = train_ease(matrix_from_dense(dense[[0, 1, 3, 4]]), np.ones(4), lam=1.0)
print(f"max |B_weighted - B_reduced| = {np.abs(weighted.b - reduced.b).max():.2e}")

print("\n=== 3. the denoising autoencoder ===")
cfg = TrainConfig(learning_rate=0.01, max_epochs=300, patience=300, dropout=0.2, l2=0.001, seed=0)
dae = train_dae(matrix, row_weights=np.ones(5), d=3, config=cfg)
scores = score_dae(dae, r)
print(f"user 0 row {r}")
print(f"reconstruction {np.round(scores, 3)} (sigmoid outputs in (0,1))")
ranked = np.argsort(-scores)
print(f"items by reconstructed score: {ranked}")

print("\n=== 4. determinism: same seed, same parameters ===")
again = train_dae(matrix, row_weights=np.ones(5), d=3, config=cfg)
identical = all(
    np.array_equal(getattr(dae, name), getattr(again, name))
    for name in ("w_enc", "b_enc", "w_dec", "b_dec")
)
print(f"retrained with the same config: bit-identical = {identical}")
