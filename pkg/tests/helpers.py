"""Shared test utilities and independent oracles.

The oracles here deliberately avoid the shortcuts used by the library code:
EASE is solved column by column as a constrained ridge system, greedy
coverage works on plain Python sets, metrics score every prefix position
directly, and gradients come from central finite differences.
"""

import math

import numpy as np

from localrec.data import RatingMatrix
from localrec.models import dae_loss

DAE_PARAM_NAMES = ("w_enc", "b_enc", "w_dec", "b_dec")


def matrix_from_dense(dense) -> RatingMatrix:
    """Build a RatingMatrix whose column j is exactly dense[:, j]."""
    dense = np.asarray(dense, dtype=np.float64)
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


def random_binary_matrix(rng, m, n, density=0.5) -> RatingMatrix:
    """Random binary matrix with no all-zero user rows."""
    dense = (rng.random((m, n)) < density).astype(np.float64)
    empty = dense.sum(axis=1) == 0
    dense[empty, rng.integers(0, n, size=int(empty.sum()))] = 1.0
    return matrix_from_dense(dense)


def ease_oracle(x, weights, lam):
    """Zero-diagonal ridge regression solved column by column (independent of
    the precision-matrix shortcut used by train_ease)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[1]
    d = np.diag(weights)
    b = np.zeros((n, n))
    for j in range(n):
        others = [i for i in range(n) if i != j]
        a = x[:, others]
        g = a.T @ d @ a + lam * np.eye(n - 1)
        rhs = a.T @ d @ x[:, j]
        b[others, j] = np.linalg.solve(g, rhs)
    return b


def greedy_cover_oracle(adj_sets, q):
    """Brute-force greedy max-coverage with self-coverage, lowest-index ties,
    and the clear-covered-and-continue rule."""
    m = len(adj_sets)
    anchors, covered = [], set()
    remaining = set(range(m))
    for _ in range(q):
        best, best_gain = None, -1
        for node in sorted(remaining):
            gain = len((adj_sets[node] | {node}) - covered)
            if gain > best_gain:
                best, best_gain = node, gain
        anchors.append(best)
        remaining.discard(best)
        covered |= adj_sets[best] | {best}
        if len(covered) == m:
            covered = set()
    return anchors


def prefix_metric_oracle(ranked, heldout, n):
    """Exhaustive recall/NDCG re-implementation scoring each prefix position."""
    heldout = set(heldout)
    rel = [1 if item in heldout else 0 for item in list(ranked)[:n]]
    recall = sum(rel) / len(heldout)
    dcg = sum((2**r - 1) / math.log2(i + 2) for i, r in enumerate(rel))
    ones = min(len(heldout), n)
    idcg = sum(1 / math.log2(i + 2) for i in range(ones))
    return recall, dcg / idcg


def finite_diff_grads(model, x_in, x_target, t, l2, step=1e-4):
    """Central-difference gradients of the weighted autoencoder loss."""
    grads = {}
    for name in DAE_PARAM_NAMES:
        arr = getattr(model, name)
        g = np.zeros_like(arr)
        flat, gflat = arr.ravel(), g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = dae_loss(model, x_in, x_target, t, l2)
            flat[i] = orig - step
            down = dae_loss(model, x_in, x_target, t, l2)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        grads[name] = g
    return grads


def max_rel_error(analytic, numeric):
    """Element-wise error relative to the gradient scale, floored at 1e-2."""
    worst = 0.0
    for name in DAE_PARAM_NAMES:
        a, f = analytic[name], numeric[name]
        rel = np.abs(a - f) / np.maximum.reduce([np.abs(a), np.abs(f), np.full_like(a, 1e-2)])
        worst = max(worst, float(rel.max()))
    return worst
