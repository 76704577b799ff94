"""Training and inference for the local-model ensemble.

Pipeline: embed users, pick anchors, build per-anchor weight pairs, train one
weighted local model per anchor (optionally in parallel) plus one global model
with uniform weights, then blend at inference:

    prediction(u) = alpha * global(r_u)
                    + (1 - alpha) * sum_j w_j(u) * local_j(r_u) / sum_j w_j(u)

Users no local model covers (all w_j(u) = 0) fall back to the global model
alone. Every local model gets its own RNG seed derived from the run seed and
its anchor position, so results do not depend on the degree of parallelism.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .anchors import AnchorSet, build_coverage_graph, coverage_ratio, select_anchors
from .data import RatingMatrix, SplitDataset
from .errors import ConfigError, TrainingError
from .models import (
    DaeModel,
    EaseModel,
    TrainConfig,
    load_model,
    save_model,
    score_dae,
    score_ease,
    train_dae,
    train_ease,
)
from .neighborhood import (
    KernelConfig,
    WeightPair,
    build_weight_pair,
    compute_user_embeddings,
)

BASE_MODELS = ("ease", "dae")
_SEED_STRIDE = 1_000_003


@dataclass
class EnsembleConfig:
    """Everything needed to train a local-model ensemble."""

    q: int
    kernel: KernelConfig
    alpha: float = 0.5
    base_model: str = "ease"
    anchor_strategy: str = "coverage"
    embedding_method: str = "auto"  # auto | truncated-svd | dae-hidden
    embedding_dim: int = 32
    jobs: int = 1
    seed: int = 0
    lam: float = 10.0
    dae: TrainConfig = field(default_factory=TrainConfig)
    dae_dim: int = 64
    scale_distances: bool = False
    # optional overrides for the global model; None shares the local values
    global_lam: float | None = None
    global_dae: TrainConfig | None = None

    def __post_init__(self):
        if self.q < 0:
            raise ConfigError(f"q must be >= 0, got {self.q}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.base_model not in BASE_MODELS:
            raise ConfigError(f"unknown base model {self.base_model!r}; expected one of {BASE_MODELS}")
        if self.embedding_method not in ("auto",) and self.embedding_method not in (
            "truncated-svd",
            "dae-hidden",
        ):
            raise ConfigError(f"unknown embedding method {self.embedding_method!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    def resolved_embedding_method(self) -> str:
        if self.embedding_method != "auto":
            return self.embedding_method
        return "dae-hidden" if self.base_model == "dae" else "truncated-svd"


@dataclass
class LocalModelEntry:
    anchor: int
    weights: WeightPair
    model: EaseModel | DaeModel


@dataclass
class EnsembleModel:
    global_model: EaseModel | DaeModel
    locals: list[LocalModelEntry]
    anchor_set: AnchorSet
    config: EnsembleConfig
    m: int
    n: int


def local_seed(seed: int, j: int) -> int:
    """Injective per-local-model seed so parallel order cannot matter."""
    return seed * _SEED_STRIDE + j


def score_base(model: EaseModel | DaeModel, r_u: np.ndarray) -> np.ndarray:
    if isinstance(model, EaseModel):
        return score_ease(model, r_u)
    if isinstance(model, DaeModel):
        return score_dae(model, r_u)
    raise ConfigError(f"cannot score {type(model).__name__}")


def _train_base(train: RatingMatrix, row_weights: np.ndarray, config: EnsembleConfig, seed: int):
    if config.base_model == "ease":
        return train_ease(train, row_weights, config.lam)
    return train_dae(train, row_weights, config.dae_dim, replace(config.dae, seed=seed))


def _train_local(train: RatingMatrix, pair: WeightPair, config: EnsembleConfig, j: int):
    try:
        return _train_base(train, pair.t, config, local_seed(config.seed, j))
    except Exception as exc:
        raise TrainingError(f"local model {j} (anchor {pair.anchor}) failed: {exc}") from exc


def _train_global(train: RatingMatrix, config: EnsembleConfig):
    ones = np.ones(train.m)
    if config.base_model == "ease":
        return train_ease(train, ones, config.global_lam if config.global_lam is not None else config.lam)
    cfg = config.global_dae if config.global_dae is not None else config.dae
    return train_dae(train, ones, config.dae_dim, replace(cfg, seed=config.seed))


def train_ensemble(split: SplitDataset, config: EnsembleConfig) -> EnsembleModel:
    """Run the full divide / train / aggregate pipeline on the train matrix."""
    train = split.train
    if train.m == 0:
        raise ConfigError("cannot train on an empty dataset")

    method = config.resolved_embedding_method()

    # the global model doubles as the embedding network when its hidden
    # layer is the requested embedding source
    global_model = _train_global(train, config)

    if config.q == 0:
        anchor_set = AnchorSet(anchors=[], strategy=config.anchor_strategy, seed=config.seed)
        return EnsembleModel(global_model, [], anchor_set, config, train.m, train.n)

    if method == "dae-hidden":
        if isinstance(global_model, DaeModel):
            embed_net = global_model
        else:
            embed_net = train_dae(
                train, np.ones(train.m), config.dae_dim, replace(config.dae, seed=config.seed)
            )
        embeddings = compute_user_embeddings(
            train, method="dae-hidden", d=embed_net.d, seed=config.seed, dae=embed_net
        )
    else:
        embeddings = compute_user_embeddings(
            train, method="truncated-svd", d=config.embedding_dim, seed=config.seed
        )

    graph = build_coverage_graph(embeddings, config.kernel.h_w, scale=config.scale_distances)
    anchor_set = select_anchors(
        graph, embeddings, config.q, strategy=config.anchor_strategy, seed=config.seed
    )
    pairs = [
        build_weight_pair(embeddings, a, config.kernel, scale=config.scale_distances)
        for a in anchor_set.anchors
    ]

    if config.jobs > 1 and config.q > 1:
        models = Parallel(n_jobs=config.jobs, backend="threading")(
            delayed(_train_local)(train, pair, config, j) for j, pair in enumerate(pairs)
        )
    else:
        models = [_train_local(train, pair, config, j) for j, pair in enumerate(pairs)]

    entries = [
        LocalModelEntry(anchor=pair.anchor, weights=pair, model=model)
        for pair, model in zip(pairs, models)
    ]
    return EnsembleModel(global_model, entries, anchor_set, config, train.m, train.n)


def predict_user(model: EnsembleModel, u: int, r_u: np.ndarray) -> np.ndarray:
    """Blend global and covering local scores for one user's train row."""
    if not 0 <= u < model.m:
        raise ConfigError(f"user index {u} out of range [0, {model.m})")
    global_scores = score_base(model.global_model, r_u)
    if not model.locals:
        return global_scores

    weight_sum = 0.0
    local_mix = np.zeros(model.n)
    for entry in model.locals:
        w_u = float(entry.weights.w[u])
        if w_u > 0.0:
            local_mix += w_u * score_base(entry.model, r_u)
            weight_sum += w_u
    if weight_sum == 0.0:
        return global_scores  # uncovered user: global fallback (alpha forced to 1)
    alpha = model.config.alpha
    return alpha * global_scores + (1.0 - alpha) * local_mix / weight_sum


def predict_all(model: EnsembleModel, train: RatingMatrix) -> np.ndarray:
    """Score matrix for every user (rows follow the train matrix)."""
    out = np.empty((model.m, model.n))
    for u in range(model.m):
        out[u] = predict_user(model, u, train.row_vector(u))
    return out


def recommend_top_n(
    model: EnsembleModel,
    u: int,
    r_u: np.ndarray,
    n: int = 10,
    exclude_train: bool = True,
) -> np.ndarray:
    """Top-n item indices by score, ties broken by lower item index."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    scores = predict_user(model, u, r_u)
    candidates = np.flatnonzero(np.asarray(r_u) == 0) if exclude_train else np.arange(model.n)
    order = candidates[np.lexsort((candidates, -scores[candidates]))]
    return order[:n]


# ---------------------------------------------------------------- persistence

def _config_to_dict(config: EnsembleConfig) -> dict:
    data = asdict(config)
    # jobs is an execution knob, not a model property; omitting it keeps
    # serialized ensembles byte-identical across parallelism settings
    data.pop("jobs")
    return data


def _config_from_dict(data: dict) -> EnsembleConfig:
    data = dict(data)
    data["kernel"] = KernelConfig(**data["kernel"])
    data["dae"] = TrainConfig(**data["dae"])
    if data.get("global_dae") is not None:
        data["global_dae"] = TrainConfig(**data["global_dae"])
    return EnsembleConfig(**data)


def save_ensemble(model: EnsembleModel, out_dir: str | Path) -> None:
    """Persist the ensemble as a directory: manifest, one file per model,
    one weight-pair file per local model."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    save_model(model.global_model, out_dir / "global.model")
    for j, entry in enumerate(model.locals):
        save_model(entry.model, out_dir / f"local_{j:04d}.model")
        np.save(out_dir / f"weights_{j:04d}.npy", np.stack([entry.weights.t, entry.weights.w]))

    manifest = {
        "format": 1,
        "m": model.m,
        "n": model.n,
        "anchors": [int(a) for a in model.anchor_set.anchors],
        "anchor_strategy": model.anchor_set.strategy,
        "anchor_seed": model.anchor_set.seed,
        "local_seeds": [local_seed(model.config.seed, j) for j in range(len(model.locals))],
        "config": _config_to_dict(model.config),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_ensemble(in_dir: str | Path) -> EnsembleModel:
    in_dir = Path(in_dir)
    try:
        with open(in_dir / "manifest.json") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read ensemble from {in_dir}: {exc}") from exc

    config = _config_from_dict(manifest["config"])
    global_model = load_model(in_dir / "global.model")
    entries = []
    for j, anchor in enumerate(manifest["anchors"]):
        local = load_model(in_dir / f"local_{j:04d}.model")
        stacked = np.load(in_dir / f"weights_{j:04d}.npy")
        pair = WeightPair(anchor=int(anchor), t=stacked[0], w=stacked[1])
        entries.append(LocalModelEntry(anchor=int(anchor), weights=pair, model=local))
    anchor_set = AnchorSet(
        anchors=[int(a) for a in manifest["anchors"]],
        strategy=manifest["anchor_strategy"],
        seed=manifest["anchor_seed"],
    )
    return EnsembleModel(
        global_model=global_model,
        locals=entries,
        anchor_set=anchor_set,
        config=config,
        m=manifest["m"],
        n=manifest["n"],
    )


def ensemble_coverage(model: EnsembleModel) -> float:
    """Fraction of users with at least one positive inference weight."""
    if not model.locals:
        return 0.0
    return coverage_ratio(model.anchor_set, [e.weights for e in model.locals])
