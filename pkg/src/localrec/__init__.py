"""Top-N recommenders built from kernel-weighted local sub-community models.

The pipeline: binarize an interaction log, embed users, grow kernel-weighted
neighborhoods around greedily selected anchor users, train one small weighted
recommender per neighborhood plus one global model, and blend their scores at
inference with a global fallback for uncovered users.
"""

from .anchors import (
    AnchorSet,
    CoverageGraph,
    build_coverage_graph,
    coverage_ratio,
    select_anchors,
)
from .data import (
    InteractionLog,
    RatingMatrix,
    Schema,
    SplitDataset,
    leave_k_out_split,
    load_interactions,
    load_split,
    preprocess,
    save_split,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleModel,
    ensemble_coverage,
    load_ensemble,
    predict_user,
    recommend_top_n,
    save_ensemble,
    train_ensemble,
)
from .errors import (
    ConfigError,
    DataFormatError,
    EmptyDatasetError,
    LocalRecError,
    MetricError,
    TrainingError,
)
from .evaluation import (
    EvalReport,
    breakdown_by_activity,
    evaluate_model,
    ndcg_at_n,
    recall_at_n,
    save_report,
)
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
    EmbeddingMatrix,
    KernelConfig,
    WeightPair,
    arccos_distance,
    build_weight_pair,
    compute_user_embeddings,
    kernel_weight,
)
from .synthetic import generate_blocked_log, write_interactions_csv

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "ConfigError",
    "CoverageGraph",
    "DaeModel",
    "DataFormatError",
    "EaseModel",
    "EmbeddingMatrix",
    "EmptyDatasetError",
    "EnsembleConfig",
    "EnsembleModel",
    "EvalReport",
    "InteractionLog",
    "KernelConfig",
    "LocalRecError",
    "MetricError",
    "RatingMatrix",
    "Schema",
    "SplitDataset",
    "TrainConfig",
    "TrainingError",
    "WeightPair",
    "arccos_distance",
    "breakdown_by_activity",
    "build_coverage_graph",
    "build_weight_pair",
    "compute_user_embeddings",
    "coverage_ratio",
    "ensemble_coverage",
    "evaluate_model",
    "generate_blocked_log",
    "kernel_weight",
    "leave_k_out_split",
    "load_ensemble",
    "load_interactions",
    "load_model",
    "load_split",
    "ndcg_at_n",
    "preprocess",
    "predict_user",
    "recall_at_n",
    "recommend_top_n",
    "save_ensemble",
    "save_model",
    "save_report",
    "save_split",
    "score_dae",
    "score_ease",
    "select_anchors",
    "train_dae",
    "train_ease",
    "train_ensemble",
    "write_interactions_csv",
]
