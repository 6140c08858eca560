"""Gallery index construction and persistence.

An index is the retrieval-side view of a dataset: per-image embeddings, the
semantic graph built from structured descriptions, and display metadata.
Ground-truth identity labels never enter the index; identities are hash-based
pseudo-IDs derived from image content.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .encoders import EmbeddingStore, MockEncoder, save_store
from .errors import FormatError, NotFoundError
from .fcd import SLOTS, StructuredDescription, parse_structured_description
from .graph import (
    SemanticGraph,
    aggregate_local,
    assign_identity,
    build_single_graph,
    load_snapshot,
    merge_global,
    snapshot,
)
from .ingest import DatasetManifest, ManifestEntry
from .qhr import Candidate

STORE_FILE = "embeddings.fpem"
GALLERY_FILE = "gallery.json"
GRAPH_FILE = "graph.json"
META_FILE = "index_meta.json"


def entry_image_key(entry: ManifestEntry) -> str:
    if entry.bbox is not None:
        x, y, w, h = entry.bbox
        return f"{entry.image_path}#{x},{y},{w},{h}"
    return entry.image_path


def entry_content_bytes(entry: ManifestEntry) -> bytes:
    """Bytes hashed into the pseudo-identity: the image file when present,
    otherwise the image key (desk-scale synthetic galleries have no pixels)."""
    p = Path(entry.image_path)
    if p.is_file():
        return p.read_bytes() + (
            str(entry.bbox).encode() if entry.bbox is not None else b""
        )
    return entry_image_key(entry).encode("utf-8")


def description_from_attributes(attributes: dict) -> StructuredDescription:
    slots = {
        slot: tuple(" ".join(tok.split()).lower() for tok in attributes.get(slot, ()))
        for slot in SLOTS
    }
    return StructuredDescription(**slots)


@dataclass
class GalleryIndex:
    candidates: list = field(default_factory=list)
    graph: SemanticGraph = field(default_factory=SemanticGraph)
    dim: int = 256
    metadata: dict = field(default_factory=dict)  # image_key -> display info

    def by_key(self, image_key: str) -> Candidate:
        for c in self.candidates:
            if c.image_key == image_key:
                return c
        raise NotFoundError(f"unknown gallery key {image_key!r}")

    def keys(self):
        return [c.image_key for c in self.candidates]


class StoreEncoder:
    """Encoder facade over a precomputed embedding store; falls back to the
    mock encoder for query text the store has never seen."""

    def __init__(self, store: EmbeddingStore, seed: int = 0):
        self.store = store
        self.dim = store.dim
        self._fallback = MockEncoder(seed=seed, dim=store.dim)

    def lookup(self, key: str):
        return self.store.lookup(key)

    def embed_bag(self, bag):
        return self._fallback.embed_bag(bag)

    def embed_text(self, text: str):
        vec = self.store.lookup(text)
        return vec if vec is not None else self._fallback.embed_text(text)


def _entry_descriptions(entry: ManifestEntry):
    """(y_ori, y_ren) for one entry: the first caption when it parses as
    slot-structured text, plus the attribute-derived structured form."""
    y_ren = description_from_attributes(entry.attributes)
    y_ori = None
    for text in entry.descriptions:
        try:
            y_ori = parse_structured_description(text)
            break
        except Exception:
            continue
    return y_ori, y_ren


def build_index(manifest: DatasetManifest, encoder) -> GalleryIndex:
    index = GalleryIndex(dim=encoder.dim)
    per_identity: dict[str, list] = {}
    for entry in manifest.entries:
        key = entry_image_key(entry)
        vid = assign_identity(entry_content_bytes(entry))
        y_ori, y_ren = _entry_descriptions(entry)
        tokens = list(y_ren.tokens())
        if y_ori is not None:
            tokens.extend(y_ori.tokens())
        img_emb = encoder.embed_bag(y_ren.tokens() or tokens)
        txt_emb = encoder.embed_bag(tokens)
        sctxt = {}
        for slot in SLOTS:
            phrases = y_ren.slot(slot)
            if phrases:
                sctxt[slot] = encoder.embed_bag(
                    [t for p in phrases for t in p.split()]
                )
        index.candidates.append(
            Candidate(
                image_key=key,
                identity=vid,
                img_embedding=img_emb,
                txt_embedding=txt_emb,
                sctxt=sctxt,
            )
        )
        index.metadata[key] = {
            "image_path": entry.image_path,
            "bbox": entry.bbox,
            "identity": vid,
            "description": " ; ".join(entry.descriptions),
            "attributes": {s: list(entry.attributes.get(s, ())) for s in SLOTS},
        }
        per_identity.setdefault(vid, []).append(
            build_single_graph(key, vid, y_ori, y_ren, encoder=encoder)
        )
    locals_ = [
        aggregate_local(graphs) if len(graphs) > 1 else graphs[0]
        for graphs in per_identity.values()
    ]
    index.graph = merge_global(locals_)
    return index


# --------------------------------------------------------------------------
# persistence


def save_index(index: GalleryIndex, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vectors = {}
    for c in index.candidates:
        vectors[f"{c.image_key}|img"] = c.img_embedding
        vectors[f"{c.image_key}|txt"] = c.txt_embedding
        for slot, vec in c.sctxt.items():
            vectors[f"{c.image_key}|sctxt|{slot}"] = vec
    save_store(out / STORE_FILE, index.dim, vectors)
    order = [{"image_key": c.image_key, "identity": c.identity,
              "slots": sorted(c.sctxt)} for c in index.candidates]
    (out / GALLERY_FILE).write_text(json.dumps(order, indent=1), encoding="utf-8")
    snapshot(index.graph, out / GRAPH_FILE)
    (out / META_FILE).write_text(
        json.dumps({"dim": index.dim, "count": len(index.candidates),
                    "metadata": index.metadata}, indent=1),
        encoding="utf-8",
    )


def load_index(index_dir) -> GalleryIndex:
    root = Path(index_dir)
    try:
        meta = json.loads((root / META_FILE).read_text(encoding="utf-8"))
        order = json.loads((root / GALLERY_FILE).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable index at {index_dir}: {exc}") from exc
    from .encoders import load_store

    store = load_store(root / STORE_FILE)
    candidates = []
    for rec in order:
        key = rec["image_key"]
        img = store.lookup(f"{key}|img")
        txt = store.lookup(f"{key}|txt")
        if img is None or txt is None:
            raise FormatError(f"index store missing vectors for {key!r}")
        sctxt = {}
        for slot in rec["slots"]:
            vec = store.lookup(f"{key}|sctxt|{slot}")
            if vec is None:
                raise FormatError(f"index store missing slot vector for {key!r}")
            sctxt[slot] = vec
        candidates.append(
            Candidate(
                image_key=key,
                identity=rec["identity"],
                img_embedding=img,
                txt_embedding=txt,
                sctxt=sctxt,
            )
        )
    return GalleryIndex(
        candidates=candidates,
        graph=load_snapshot(root / GRAPH_FILE),
        dim=meta["dim"],
        metadata=meta.get("metadata", {}),
    )
