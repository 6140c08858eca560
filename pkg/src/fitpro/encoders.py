"""Embedding providers and the cosine similarity kernel.

Two reference providers are included: a deterministic mock encoder that turns
attribute bags into unit vectors (cosine grows with token overlap), and a
file-backed store for precomputed embeddings.  Both are immutable after
construction and safe to share across threads.

Binary store layout: header ``FPEM`` | u32 version=1 | u32 dim | u64 count,
then ``count`` records of [u16 keylen][utf-8 key][dim x f32 LE].
"""

from __future__ import annotations

import functools
import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import DegenerateVectorError, DimensionError, FormatError

STORE_MAGIC = b"FPEM"
STORE_VERSION = 1
DEFAULT_DIM = 256

_HEADER = struct.Struct("<4sIIQ")
_KEYLEN = struct.Struct("<H")


def as_unit(values, dim: int | None = None) -> np.ndarray:
    """Normalize to a float32 unit vector; accumulation done in float64."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DegenerateVectorError("embedding must be a non-empty 1-d array")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dim {dim}, got {v.size}")
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateVectorError("cannot normalize a zero/non-finite vector")
    return (v / norm).astype(np.float32)


def cosine_sim(a, b) -> float:
    """Cosine similarity; symmetric, result clamped to [-1, 1]."""
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise DimensionError(f"dim mismatch: {av.shape} vs {bv.shape}")
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine undefined for zero vector")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))


def normalize_bag(tokens) -> frozenset[str]:
    """Lowercase, strip, and dedupe attribute tokens."""
    bag = frozenset(t.strip().lower() for t in tokens if t and t.strip())
    return bag


@functools.lru_cache(maxsize=65536)
def _token_vector(token: str, seed: int, dim: int) -> np.ndarray:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def mock_embed(bag, seed: int = 0, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic embedding of an attribute bag.

    Each token maps to a seeded pseudo-random unit direction; the result is
    the normalized sum, so cosine similarity is monotone in token overlap.
    Identical (bag, seed, dim) inputs give bit-identical output.
    """
    if dim < 8:
        raise DimensionError("mock embeddings need dim >= 8")
    tokens = tuple(sorted(normalize_bag(bag)))
    if not tokens:
        raise DegenerateVectorError("cannot embed an empty attribute bag")
    return _embed_tokens(tokens, seed, dim).copy()


@functools.lru_cache(maxsize=65536)
def _embed_tokens(tokens: tuple, seed: int, dim: int) -> np.ndarray:
    acc = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        acc += _token_vector(token, seed, dim)
    return as_unit(acc)


class MockEncoder:
    """Attribute-bag encoder backed by :func:`mock_embed`."""

    def __init__(self, seed: int = 0, dim: int = DEFAULT_DIM):
        if dim < 8:
            raise DimensionError("mock embeddings need dim >= 8")
        self.seed = seed
        self.dim = dim

    def embed_bag(self, bag) -> np.ndarray:
        return mock_embed(bag, seed=self.seed, dim=self.dim)

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_bag(text.replace(",", " ").replace(";", " ").split())


class EmbeddingStore:
    """In-memory view of a binary embedding store file."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray]):
        self.dim = dim
        self._vectors = vectors

    @property
    def count(self) -> int:
        return len(self._vectors)

    def lookup(self, key: str) -> np.ndarray | None:
        """Stored vector for key, or None when absent (missing is not an error)."""
        return self._vectors.get(key)

    def keys(self):
        return self._vectors.keys()


def save_store(path, dim: int, vectors: dict[str, np.ndarray]) -> None:
    if dim <= 0:
        raise FormatError("store dim must be positive")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(STORE_MAGIC, STORE_VERSION, dim, len(vectors)))
        for key, vec in vectors.items():
            v = np.asarray(vec, dtype=np.float32)
            if v.shape != (dim,):
                raise DimensionError(f"vector for {key!r} has shape {v.shape}")
            raw = key.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise FormatError("store key longer than u16")
            fh.write(_KEYLEN.pack(len(raw)))
            fh.write(raw)
            fh.write(v.astype("<f4").tobytes())


def load_store(path) -> EmbeddingStore:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError("store file shorter than header")
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != STORE_MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != STORE_VERSION:
        raise FormatError(f"unsupported store version {version}")
    if dim <= 0:
        raise FormatError("store dim must be positive")
    vectors: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    rec_bytes = 4 * dim
    for _ in range(count):
        if offset + _KEYLEN.size > len(data):
            raise FormatError("truncated record header")
        (keylen,) = _KEYLEN.unpack_from(data, offset)
        offset += _KEYLEN.size
        if offset + keylen + rec_bytes > len(data):
            raise FormatError("truncated record payload")
        key = data[offset : offset + keylen].decode("utf-8")
        offset += keylen
        vectors[key] = np.frombuffer(
            data, dtype="<f4", count=dim, offset=offset
        ).copy()
        offset += rec_bytes
    return EmbeddingStore(dim, vectors)
