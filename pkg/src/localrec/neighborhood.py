"""User embeddings, arccos distances, and Epanechnikov kernel weights.

Distances are unscaled arc lengths in [0, pi]; pass ``scale=True`` to divide
by pi where a [0, 1] range is wanted. Kernel weights use the bandwidth-scaled
Epanechnikov form (1 - (s/h)^2) * 1[s < h], which stays non-negative for any
bandwidth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import RatingMatrix
from .errors import ConfigError

EMBEDDING_METHODS = ("truncated-svd", "dae-hidden")


@dataclass
class EmbeddingMatrix:
    """Dense per-user embedding vectors used for anchor distances."""

    vectors: np.ndarray  # (m, d)
    method: str
    seed: int

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidths for the training (h_t) and inference (h_w) kernels."""

    h_t: float
    h_w: float

    def __post_init__(self):
        if not 0 < self.h_w <= self.h_t:
            raise ConfigError(
                f"bandwidths must satisfy 0 < h_w <= h_t, got h_w={self.h_w}, h_t={self.h_t}"
            )


@dataclass
class WeightPair:
    """Per-anchor training weights t (wide kernel) and inference weights w (narrow)."""

    anchor: int
    t: np.ndarray
    w: np.ndarray


def arccos_distance(a: np.ndarray, u: np.ndarray) -> float:
    """Angle between two embedding vectors in radians, in [0, pi].

    The cosine is clamped to [-1, 1] before arccos to absorb floating-point
    drift. Zero-norm inputs are a domain error.
    """
    a = np.asarray(a, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if a.shape != u.shape:
        raise ValueError(f"vector lengths differ: {a.shape} vs {u.shape}")
    na = np.linalg.norm(a)
    nu = np.linalg.norm(u)
    if na == 0.0 or nu == 0.0:
        raise ValueError("arccos distance is undefined for zero-norm vectors")
    if np.array_equal(a, u):  # identical vectors are at distance exactly 0
        return 0.0
    cos = np.clip(np.dot(a, u) / (na * nu), -1.0, 1.0)
    return float(np.arccos(cos))


def kernel_weight(s, h: float):
    """Epanechnikov weight (1 - (s/h)^2) * 1[s < h]; accepts scalars or arrays."""
    if h <= 0:
        raise ConfigError(f"bandwidth must be positive, got {h}")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("distances must be non-negative")
    out = np.where(s < h, 1.0 - (s / h) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def distances_from(embeddings: EmbeddingMatrix, anchor: int, scale: bool = False) -> np.ndarray:
    """Arccos distances from one user to every user (vectorized)."""
    vecs = embeddings.vectors
    if not 0 <= anchor < embeddings.m:
        raise ConfigError(f"anchor index {anchor} out of range [0, {embeddings.m})")
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("embedding matrix contains zero-norm vectors")
    cos = (vecs @ vecs[anchor]) / (norms * norms[anchor])
    dist = np.arccos(np.clip(cos, -1.0, 1.0))
    # identical vectors sit at distance exactly 0, untouched by rounding
    dist[np.all(vecs == vecs[anchor], axis=1)] = 0.0
    return dist / np.pi if scale else dist


def pairwise_distances(embeddings: EmbeddingMatrix, scale: bool = False) -> np.ndarray:
    """Full m x m arccos distance matrix (zero diagonal, symmetric)."""
    vecs = embeddings.vectors
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("embedding matrix contains zero-norm vectors")
    cos = (vecs @ vecs.T) / np.outer(norms, norms)
    dist = np.arccos(np.clip(cos, -1.0, 1.0))
    np.fill_diagonal(dist, 0.0)
    # enforce exact symmetry against floating-point noise in the Gram product
    dist = np.minimum(dist, dist.T)
    return dist / np.pi if scale else dist


def build_weight_pair(
    embeddings: EmbeddingMatrix,
    anchor: int,
    config: KernelConfig,
    scale: bool = False,
) -> WeightPair:
    """Kernel weights of every user relative to one anchor, at both bandwidths."""
    s = distances_from(embeddings, anchor, scale=scale)
    return WeightPair(
        anchor=anchor,
        t=kernel_weight(s, config.h_t),
        w=kernel_weight(s, config.h_w),
    )


def _svd_embeddings(train: RatingMatrix, d: int) -> np.ndarray:
    x = train.to_dense()
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    # stabilize signs so repeated runs agree across LAPACK drivers
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivot, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u = u * signs
    return u[:, :d] * s[:d]


def compute_user_embeddings(
    train: RatingMatrix,
    method: str = "truncated-svd",
    d: int = 64,
    seed: int = 0,
    dae=None,
) -> EmbeddingMatrix:
    """Embed users either by truncated SVD of the train matrix or by the
    hidden layer of a trained denoising autoencoder.

    ``method="dae-hidden"`` requires ``dae`` (a trained ``DaeModel``) whose
    hidden width equals ``d``. Zero-norm embeddings are replaced by a unit
    vector along the first axis so arccos distances stay defined.
    """
    if method not in EMBEDDING_METHODS:
        raise ConfigError(f"unknown embedding method {method!r}; expected one of {EMBEDDING_METHODS}")
    if d < 1:
        raise ConfigError(f"embedding dimension must be >= 1, got {d}")

    if method == "truncated-svd":
        if d > min(train.m, train.n):
            raise ConfigError(
                f"embedding dimension {d} exceeds min(m, n) = {min(train.m, train.n)}"
            )
        vectors = _svd_embeddings(train, d)
    else:
        from .models import DaeModel, dae_hidden

        if dae is None or not isinstance(dae, DaeModel):
            raise ConfigError("method 'dae-hidden' requires a trained DaeModel")
        if dae.d != d:
            raise ConfigError(f"requested d={d} but the DAE hidden width is {dae.d}")
        vectors = dae_hidden(dae, train.to_dense())

    zero = np.linalg.norm(vectors, axis=1) == 0.0
    if np.any(zero):
        warnings.warn(
            f"{int(zero.sum())} zero-norm embeddings replaced by a fixed unit vector",
            stacklevel=2,
        )
        vectors = vectors.copy()
        vectors[zero, :] = 0.0
        vectors[zero, 0] = 1.0
    return EmbeddingMatrix(vectors=vectors, method=method, seed=seed)


def save_embeddings(embeddings: EmbeddingMatrix, path: str | Path) -> None:
    """Write embeddings as a delimited matrix with a one-line header."""
    header = f"m={embeddings.m} d={embeddings.d} method={embeddings.method} seed={embeddings.seed}"
    np.savetxt(path, embeddings.vectors, fmt="%.17g", delimiter=",", header=header)


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    with open(path) as fh:
        header = fh.readline().lstrip("# ").strip()
    meta = dict(part.split("=", 1) for part in header.split())
    vectors = np.loadtxt(path, delimiter=",", ndmin=2)
    if vectors.shape != (int(meta["m"]), int(meta["d"])):
        raise ConfigError(
            f"{path}: header says {(meta['m'], meta['d'])}, file holds {vectors.shape}"
        )
    return EmbeddingMatrix(vectors=vectors, method=meta["method"], seed=int(meta["seed"]))
