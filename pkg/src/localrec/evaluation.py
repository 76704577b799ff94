"""Ranking metrics over held-out items and per-user activity breakdowns.

Relevance is binary, so DCG gains reduce to 1/log2(rank+1). The ideal DCG
places min(k, N) relevant items first, which makes NDCG = 1 achievable even
when more items are held out than the cutoff shows. Recall divides by k (the
held-out count), not by min(k, N).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import RatingMatrix, SplitDataset
from .ensemble import EnsembleModel, ensemble_coverage, predict_user
from .errors import ConfigError, MetricError
from .models import DaeModel, EaseModel, score_dae, score_ease

METRICS = ("recall", "ndcg")


@dataclass
class EvalReport:
    """Per-user and mean Recall@N / NDCG@N plus local-coverage statistics."""

    users: np.ndarray  # users with a non-empty held-out set
    per_user: dict[str, dict[int, np.ndarray]]  # metric -> N -> values over users
    means: dict[str, dict[int, float]]
    coverage: float
    n_values: tuple[int, ...]
    k: int


def recall_at_n(ranked, heldout, n: int) -> float:
    """Hits in the top n divided by the held-out size."""
    if n < 1:
        raise ConfigError(f"N must be >= 1, got {n}")
    heldout = set(int(i) for i in heldout)
    if not heldout:
        raise MetricError("recall is undefined for an empty held-out set")
    hits = sum(1 for item in list(ranked)[:n] if int(item) in heldout)
    return hits / len(heldout)


def ndcg_at_n(ranked, heldout, n: int) -> float:
    """Binary-relevance NDCG at cutoff n."""
    if n < 1:
        raise ConfigError(f"N must be >= 1, got {n}")
    heldout = set(int(i) for i in heldout)
    if not heldout:
        raise MetricError("NDCG is undefined for an empty held-out set")
    dcg = 0.0
    for pos, item in enumerate(list(ranked)[:n]):
        if int(item) in heldout:
            dcg += 1.0 / np.log2(pos + 2)
    ideal_slots = min(len(heldout), n)
    idcg = sum(1.0 / np.log2(pos + 2) for pos in range(ideal_slots))
    return dcg / idcg


def ranked_candidates(scores: np.ndarray, exclude: np.ndarray) -> np.ndarray:
    """All items not in ``exclude``, by descending score then ascending index."""
    mask = np.ones(len(scores), dtype=bool)
    mask[exclude] = False
    candidates = np.flatnonzero(mask)
    return candidates[np.lexsort((candidates, -scores[candidates]))]


def _scorer(model):
    if isinstance(model, EnsembleModel):
        return lambda u, r: predict_user(model, u, r)
    if isinstance(model, EaseModel):
        return lambda u, r: score_ease(model, r)
    if isinstance(model, DaeModel):
        return lambda u, r: score_dae(model, r)
    raise ConfigError(f"cannot evaluate {type(model).__name__}")


def evaluate_model(model, split: SplitDataset, n_values=(50, 100)) -> EvalReport:
    """Rank every unrated item per user and score against the held-out set.

    Users with an empty held-out set are skipped (and excluded from means).
    ``model`` may be an ensemble or a bare base model; bare models report
    zero local coverage.
    """
    n_values = tuple(int(n) for n in n_values)
    if not n_values or any(n < 1 for n in n_values):
        raise ConfigError(f"n_values must be positive integers, got {n_values}")
    train = split.train
    if isinstance(model, EnsembleModel) and (model.m != train.m or model.n != train.n):
        raise ConfigError(
            f"model shape ({model.m}, {model.n}) does not match split ({train.m}, {train.n})"
        )
    if isinstance(model, (EaseModel, DaeModel)) and model.n != train.n:
        raise ConfigError(f"model has {model.n} items but the split has {train.n}")

    score = _scorer(model)
    users = [u for u in range(train.m) if len(split.heldout[u]) > 0]
    if not users:
        raise MetricError("no users have held-out items to evaluate")

    per_user = {metric: {n: np.zeros(len(users)) for n in n_values} for metric in METRICS}
    for pos, u in enumerate(users):
        r = train.row_vector(u)
        ranked = ranked_candidates(np.asarray(score(u, r), dtype=np.float64), train.rows[u])
        held = split.heldout[u]
        for n in n_values:
            per_user["recall"][n][pos] = recall_at_n(ranked, held, n)
            per_user["ndcg"][n][pos] = ndcg_at_n(ranked, held, n)

    means = {
        metric: {n: float(values.mean()) for n, values in by_n.items()}
        for metric, by_n in per_user.items()
    }
    coverage = ensemble_coverage(model) if isinstance(model, EnsembleModel) else 0.0
    return EvalReport(
        users=np.array(users, dtype=np.int64),
        per_user=per_user,
        means=means,
        coverage=coverage,
        n_values=n_values,
        k=split.k,
    )


def breakdown_by_activity(report: EvalReport, train: RatingMatrix, bucket_edges) -> list[dict]:
    """Mean metrics grouped by train-row size.

    ``bucket_edges`` [e1, e2, ...] yields buckets [0, e1), [e1, e2), ...,
    [e_last, inf). Empty buckets are flagged with ``count = 0`` and NaN means.
    """
    edges = [int(e) for e in bucket_edges]
    if any(a >= b for a, b in zip(edges, edges[1:])):
        raise ConfigError(f"bucket edges must be strictly increasing, got {edges}")
    bounds = [0, *edges, np.inf]
    sizes = np.array([len(train.rows[u]) for u in report.users])
    out = []
    for lo, hi in zip(bounds, bounds[1:]):
        inside = (sizes >= lo) & (sizes < hi)
        bucket = {"lo": lo, "hi": hi, "count": int(inside.sum())}
        for metric, by_n in report.per_user.items():
            for n, values in by_n.items():
                key = f"{metric}@{n}"
                bucket[key] = float(values[inside].mean()) if inside.any() else float("nan")
        out.append(bucket)
    return out


def save_report(report: EvalReport, out_dir: str | Path) -> None:
    """Write the per-user table (user, metric, N, value) and a summary block."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "metric", "N", "value"])
        for metric in METRICS:
            for n in report.n_values:
                values = report.per_user[metric][n]
                for u, v in zip(report.users, values):
                    writer.writerow([int(u), metric, n, f"{v:.10g}"])

    with open(out_dir / "summary.txt", "w") as fh:
        fh.write(f"users {len(report.users)}\n")
        fh.write(f"k {report.k}\n")
        fh.write(f"coverage {report.coverage:.10g}\n")
        for metric in METRICS:
            for n in report.n_values:
                fh.write(f"mean_{metric}@{n} {report.means[metric][n]:.10g}\n")
