"""Exemplar-based convex topic modeling over term co-occurrence.

Pipeline: corpus ingestion and tokenization, hypergeometric/BH vocabulary
filtering, sparse Dice similarity, globally convergent multiplicative-
update fitting (the topic count emerges from the optimization), per-topic
document scoring, and MaxMAP label-alignment evaluation.
"""

__version__ = "0.1.0"

from .corpus import (
    BackgroundStats,
    Corpus,
    Document,
    extract_candidates,
    load_background,
    load_corpus,
    load_stopwords,
    tokenize,
)
from .evaluation import (
    EvalConfig,
    EvalReport,
    average_precision,
    maxmap,
    qualified_labels,
)
from .pipeline import PipelineError, RunConfig, config_from_file, run_pipeline
from .scoring import (
    DocumentScore,
    LocalWeightConfig,
    local_weight,
    rank_documents,
    score_document,
)
from .similarity import SparseSimilarity, build_similarity, dice
from .solver import (
    DisconnectedSupportError,
    SolverConfig,
    SolverState,
    Topic,
    TopicModel,
    extract_topics,
    fit,
    log_likelihood,
    responsibilities,
    update_step,
)
from .vocabulary import Vocabulary, bh_filter, build_vocabulary, hypergeom_sf

__all__ = [
    "BackgroundStats",
    "Corpus",
    "DisconnectedSupportError",
    "Document",
    "DocumentScore",
    "EvalConfig",
    "EvalReport",
    "LocalWeightConfig",
    "PipelineError",
    "RunConfig",
    "SolverConfig",
    "SolverState",
    "SparseSimilarity",
    "Topic",
    "TopicModel",
    "Vocabulary",
    "average_precision",
    "bh_filter",
    "build_similarity",
    "build_vocabulary",
    "config_from_file",
    "dice",
    "extract_candidates",
    "extract_topics",
    "fit",
    "hypergeom_sf",
    "load_background",
    "load_corpus",
    "load_stopwords",
    "local_weight",
    "log_likelihood",
    "maxmap",
    "qualified_labels",
    "rank_documents",
    "responsibilities",
    "run_pipeline",
    "score_document",
    "tokenize",
    "update_step",
]
