"""fitpro: interactive zero-shot text-based person retrieval.

Pipeline stages: structured description generation (fcd), the incremental
semantic graph (graph), query-aware hierarchical retrieval (qhr), multi-turn
sessions (session), dataset ingestion and the evaluation harness (ingest,
index, evaluation), plus an HTTP service and CLI (service, cli).
"""

from .config import EngineConfig, load_config
from .encoders import MockEncoder, cosine_sim, load_store, mock_embed, save_store
from .evaluation import EvalResult, run_benchmark
from .fcd import StructuredDescription, parse_structured_description
from .graph import SemanticGraph, assign_identity
from .index import GalleryIndex, build_index, load_index, save_index
from .ingest import DatasetManifest, load_manifest, save_manifest
from .qhr import Candidate, FusionWeights, Query, retrieve
from .session import Engine, RetrievalSession

__all__ = [
    "Candidate",
    "DatasetManifest",
    "Engine",
    "EngineConfig",
    "EvalResult",
    "FusionWeights",
    "GalleryIndex",
    "MockEncoder",
    "Query",
    "RetrievalSession",
    "SemanticGraph",
    "StructuredDescription",
    "assign_identity",
    "build_index",
    "cosine_sim",
    "load_config",
    "load_index",
    "load_manifest",
    "load_store",
    "mock_embed",
    "parse_structured_description",
    "retrieve",
    "run_benchmark",
    "save_index",
    "save_manifest",
    "save_store",
]

__version__ = "0.1.0"
