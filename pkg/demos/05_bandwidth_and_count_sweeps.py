"""Hyperparameter sweeps: local-model count and the two kernel bandwidths.

Reproduces the shape of the bandwidth/count studies at desk scale: metric
curves as q, h_t, and h_w vary, with everything else held fixed.
"""

from localrec import (
    EnsembleConfig,
    KernelConfig,
    evaluate_model,
    leave_k_out_split,
    preprocess,
    train_ensemble,
)
from localrec.synthetic import generate_blocked_log

log = generate_blocked_log(seed=0)
matrix = preprocess(log, min_user_interactions=10)
split = leave_k_out_split(log, matrix, k=5)


def run(q, h_t, h_w):
    config = EnsembleConfig(
        q=q,
        kernel=KernelConfig(h_t=h_t, h_w=h_w),
        alpha=0.2,
        base_model="ease",
        lam=30.0,
        embedding_dim=8,
        seed=0,
    )
    report = evaluate_model(train_ensemble(split, config), split, n_values=(10,))
    return report.means["ndcg"][10], report.coverage


print("=== 1. number of local models (h_t=1.2, h_w=0.5) ===")
print("   q   NDCG@10  coverage")
for q in (0, 1, 2, 4, 8, 12):
    ndcg, cov = run(q, 1.2, 0.5)
    print(f"{q:4d}   {ndcg:.4f}   {cov:.2f}")

print("\n=== 2. training bandwidth h_t (q=4, h_w=0.5) ===")
print(" h_t   NDCG@10  coverage")
for h_t in (0.6, 0.8, 1.0, 1.2, 1.6, 2.0):
    ndcg, cov = run(4, h_t, 0.5)
    print(f"{h_t:4.1f}   {ndcg:.4f}   {cov:.2f}")

print("\n=== 3. inference bandwidth h_w (q=4, h_t=1.2) ===")
print(" h_w   NDCG@10  coverage")
for h_w in (0.2, 0.3, 0.4, 0.5, 0.6, 0.8):
    ndcg, cov = run(4, 1.2, h_w)
    print(f"{h_w:4.1f}   {ndcg:.4f}   {cov:.2f}")

print("\ntoo-narrow h_t starves local models; too-narrow h_w leaves most "
      "users on the global fallback")
