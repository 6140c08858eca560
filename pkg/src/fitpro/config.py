"""Engine configuration.

YAML key/value file with four sections (embedding, weights, retrieval,
paths); every key has a default so a missing file yields a runnable desk
configuration.  The FITPRO_CONFIG environment variable overrides the path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import FormatError, ValidationError
from .qhr import DEFAULT_TOP_N, FusionWeights

ENV_CONFIG = "FITPRO_CONFIG"


@dataclass
class EmbeddingConfig:
    provider: str = "mock"  # mock | store
    dim: int = 256
    seed: int = 0
    store_path: str | None = None

    def __post_init__(self):
        if self.provider not in ("mock", "store"):
            raise ValidationError(f"unknown embedding provider {self.provider!r}")
        if self.dim < 8:
            raise ValidationError("embedding dim must be >= 8")


@dataclass
class RetrievalConfig:
    top_n: int = DEFAULT_TOP_N
    theta: float = 0.5

    def __post_init__(self):
        if self.top_n < 1:
            raise ValidationError("top_n must be >= 1")
        if not (0.0 <= self.theta <= 1.0):
            raise ValidationError("theta must be in [0, 1]")


@dataclass
class PathsConfig:
    index_dir: str = "index"
    snapshot: str | None = None


@dataclass
class EngineConfig:
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    weights: FusionWeights = field(default_factory=FusionWeights)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)


def _weights_from_dict(raw: dict) -> FusionWeights:
    w = {
        "head": raw.get("w_head", 0.25),
        "upper": raw.get("w_upper", 0.25),
        "lower": raw.get("w_lower", 0.25),
        "accessories": raw.get("w_acc", 0.25),
    }
    return FusionWeights(
        gamma=raw.get("gamma", 0.5),
        alpha=raw.get("alpha", 0.5),
        beta=raw.get("beta", 0.5),
        eta=raw.get("eta", 0.5),
        w=w,
    )


def load_config(path=None) -> EngineConfig:
    """Load configuration; None falls back to FITPRO_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        return EngineConfig()
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise FormatError(f"unreadable config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError("config root must be a mapping")
    return EngineConfig(
        embedding=EmbeddingConfig(**raw.get("embedding", {})),
        weights=_weights_from_dict(raw.get("weights", {})),
        retrieval=RetrievalConfig(**raw.get("retrieval", {})),
        paths=PathsConfig(**raw.get("paths", {})),
    )
