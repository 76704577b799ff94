"""Coverage graph over users and anchor selection strategies.

The default strategy greedily picks the user covering the most not-yet-covered
nodes (a node covers itself plus its graph neighbors). When everything is
covered before q anchors are chosen, the covered set is cleared and selection
continues, so later anchors cover most users a second time. Random, farthest
(max-min distance), and k-means strategies are provided for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .neighborhood import EmbeddingMatrix, WeightPair, pairwise_distances

STRATEGIES = ("coverage", "random", "farthest", "kmeans")

_KMEANS_MAX_ITER = 100
_KMEANS_TOL = 1e-6


@dataclass
class CoverageGraph:
    """Unweighted user graph: an edge wherever the inference kernel is positive."""

    m: int
    adjacency: list[np.ndarray]
    h_w: float


@dataclass
class AnchorSet:
    anchors: list[int]
    strategy: str
    seed: int

    def __len__(self) -> int:
        return len(self.anchors)


def build_coverage_graph(
    embeddings: EmbeddingMatrix, h_w: float, scale: bool = False
) -> CoverageGraph:
    """Connect users i != j whenever their arccos distance is below h_w."""
    if h_w <= 0:
        raise ConfigError(f"bandwidth must be positive, got {h_w}")
    dist = pairwise_distances(embeddings, scale=scale)
    close = dist < h_w
    np.fill_diagonal(close, False)
    adjacency = [np.flatnonzero(close[i]) for i in range(embeddings.m)]
    return CoverageGraph(m=embeddings.m, adjacency=adjacency, h_w=h_w)


def _greedy_coverage(graph: CoverageGraph, q: int) -> list[int]:
    m = graph.m
    cover_sets = [np.append(graph.adjacency[i], i) for i in range(m)]
    covered = np.zeros(m, dtype=bool)
    chosen = np.zeros(m, dtype=bool)
    anchors: list[int] = []
    for _ in range(q):
        best_node = -1
        best_gain = -1
        for node in range(m):  # ascending scan: ties resolve to the lowest index
            if chosen[node]:
                continue
            gain = int(np.count_nonzero(~covered[cover_sets[node]]))
            if gain > best_gain:
                best_gain = gain
                best_node = node
        anchors.append(best_node)
        chosen[best_node] = True
        covered[cover_sets[best_node]] = True
        if covered.all():
            covered[:] = False  # start covering everyone a second time
    return anchors


def _farthest(embeddings: EmbeddingMatrix, graph: CoverageGraph, q: int) -> list[int]:
    # seeded from the first coverage pick, then greedy max-min distance
    first = _greedy_coverage(graph, 1)[0]
    dist = pairwise_distances(embeddings)
    anchors = [first]
    min_dist = dist[:, first].copy()
    min_dist[first] = -np.inf
    for _ in range(q - 1):
        nxt = int(np.argmax(min_dist))  # argmax returns the lowest index on ties
        anchors.append(nxt)
        min_dist = np.minimum(min_dist, dist[:, nxt])
        min_dist[nxt] = -np.inf
    return anchors


def _kmeans(embeddings: EmbeddingMatrix, q: int, seed: int) -> list[int]:
    vecs = embeddings.vectors
    m = vecs.shape[0]
    rng = np.random.default_rng(seed)
    centroids = vecs[rng.choice(m, size=q, replace=False)].copy()
    for _ in range(_KMEANS_MAX_ITER):
        d2 = ((vecs[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        moved = 0.0
        for c in range(q):
            members = vecs[labels == c]
            if len(members) == 0:
                continue  # empty cluster keeps its previous centroid
            new = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new - centroids[c])))
            centroids[c] = new
        if moved < _KMEANS_TOL:
            break
    # nearest real user per centroid; duplicates fall through to the next-nearest
    anchors: list[int] = []
    taken = np.zeros(m, dtype=bool)
    for c in range(q):
        d2 = ((vecs - centroids[c]) ** 2).sum(axis=1)
        order = np.lexsort((np.arange(m), d2))
        for candidate in order:
            if not taken[candidate]:
                anchors.append(int(candidate))
                taken[candidate] = True
                break
    return anchors


def select_anchors(
    graph: CoverageGraph,
    embeddings: EmbeddingMatrix | None,
    q: int,
    strategy: str = "coverage",
    seed: int = 0,
) -> AnchorSet:
    """Pick q distinct anchor users under the given strategy.

    All strategies are deterministic functions of their inputs and the seed.
    ``embeddings`` may be None for the coverage and random strategies, which
    only look at the graph.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown anchor strategy {strategy!r}; expected one of {STRATEGIES}")
    if not 1 <= q <= graph.m:
        raise ConfigError(f"q must be in [1, {graph.m}], got {q}")
    if strategy in ("farthest", "kmeans") and embeddings is None:
        raise ConfigError(f"strategy {strategy!r} needs user embeddings")

    if strategy == "coverage":
        anchors = _greedy_coverage(graph, q)
    elif strategy == "random":
        rng = np.random.default_rng(seed)
        anchors = [int(a) for a in rng.choice(graph.m, size=q, replace=False)]
    elif strategy == "farthest":
        anchors = _farthest(embeddings, graph, q)
    else:
        anchors = _kmeans(embeddings, q, seed)
    return AnchorSet(anchors=anchors, strategy=strategy, seed=seed)


def coverage_ratio(anchor_set: AnchorSet, weight_pairs: list[WeightPair]) -> float:
    """Fraction of users that at least one local model covers (some w > 0)."""
    if len(weight_pairs) != len(anchor_set.anchors):
        raise ConfigError(
            f"{len(anchor_set.anchors)} anchors but {len(weight_pairs)} weight pairs"
        )
    if not weight_pairs:
        return 0.0
    covered = np.zeros(len(weight_pairs[0].w), dtype=bool)
    for pair in weight_pairs:
        covered |= pair.w > 0
    return float(covered.mean())


def save_anchors(anchor_set: AnchorSet, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(
            f"# strategy={anchor_set.strategy} seed={anchor_set.seed} q={len(anchor_set)}\n"
        )
        for a in anchor_set.anchors:
            fh.write(f"{a}\n")


def load_anchors(path: str | Path) -> AnchorSet:
    with open(path) as fh:
        header = fh.readline().lstrip("# ").strip()
        meta = dict(part.split("=", 1) for part in header.split())
        anchors = [int(line) for line in fh if line.strip()]
    if len(anchors) != int(meta["q"]):
        raise ConfigError(f"{path}: header says q={meta['q']}, file holds {len(anchors)}")
    return AnchorSet(anchors=anchors, strategy=meta["strategy"], seed=int(meta["seed"]))
