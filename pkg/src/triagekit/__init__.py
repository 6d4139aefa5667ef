"""Hybrid bug-triage recommendation engine.

Ranks candidate developers (or components) for a new issue by combining a
content-based ranker (an ensemble of layered text encoders with CNN
classifier heads and soft voting) with an interaction-based ranker
(similarity-weighted, time-decayed interaction scoring over similar closed
issues), fused by weighted rank aggregation.
"""

from .aggregate import RecommendationScores, borda, wra
from .cbr import (
    CBRModel,
    HeadConfig,
    TrainSettings,
    cbr_predict,
    cbr_train,
    fuse_layers,
    load_checkpoint,
    minmax_normalize,
    save_checkpoint,
)
from .config import EngineConfig, load_config
from .corpus import (
    BugReport,
    DeveloperProfile,
    InteractionEvent,
    SampleWeights,
    developer_profiles,
    filter_and_split,
    load_jsonl,
    normalize_text,
    resolve_owner,
    sampling_weights,
    save_jsonl,
)
from .encoders import (
    Encoder,
    EncoderSpec,
    HashedNgramEncoder,
    LayeredEmbedding,
    TrainableTextEncoder,
    build_encoder,
    encode,
    kpft_layer_status,
)
from .evaluate import (
    EvalReport,
    WilcoxonResult,
    build_report,
    orthogonality,
    per_class_top1,
    topk_accuracy,
    wilcoxon_paired,
)
from .ibr import InteractionPointTable, decay, interaction_scores, normalize_scores
from .pipeline import Engine, RetrainDecision, retrain_trigger
from .simindex import (
    EmbeddingProvider,
    HashedBowProvider,
    RemoteEmbeddingProvider,
    SimilarityIndex,
    build_index,
    cosine,
    retrieve_similar,
)
from .tuner import Axis, GridPoint, HyperParamGrid, TuneResult, grid_search

__version__ = "0.1.0"

__all__ = [
    "BugReport",
    "CBRModel",
    "DeveloperProfile",
    "EmbeddingProvider",
    "Encoder",
    "EncoderSpec",
    "Engine",
    "EngineConfig",
    "EvalReport",
    "GridPoint",
    "HashedBowProvider",
    "HashedNgramEncoder",
    "HeadConfig",
    "HyperParamGrid",
    "InteractionEvent",
    "InteractionPointTable",
    "LayeredEmbedding",
    "RecommendationScores",
    "RemoteEmbeddingProvider",
    "RetrainDecision",
    "SampleWeights",
    "SimilarityIndex",
    "TrainSettings",
    "TrainableTextEncoder",
    "TuneResult",
    "Axis",
    "WilcoxonResult",
    "borda",
    "build_encoder",
    "build_index",
    "build_report",
    "cbr_predict",
    "cbr_train",
    "cosine",
    "decay",
    "developer_profiles",
    "encode",
    "filter_and_split",
    "fuse_layers",
    "grid_search",
    "interaction_scores",
    "kpft_layer_status",
    "load_checkpoint",
    "load_config",
    "load_jsonl",
    "minmax_normalize",
    "normalize_scores",
    "normalize_text",
    "orthogonality",
    "per_class_top1",
    "resolve_owner",
    "retrain_trigger",
    "retrieve_similar",
    "sampling_weights",
    "save_checkpoint",
    "save_jsonl",
    "topk_accuracy",
    "wilcoxon_paired",
    "wra",
]
