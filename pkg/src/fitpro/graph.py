"""Incremental semantic mining: the multi-relational pedestrian graph.

Each indexed image contributes a small typed graph (image node, identity
node, slot nodes, attribute phrase nodes); graphs for one identity are
aggregated with weak same_as edges between similar attribute nodes, and all
identities merge into one global graph that grows as feedback arrives.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .encoders import cosine_sim
from .errors import (
    ConflictError,
    FormatError,
    IdentityMismatchError,
    InvalidRelationError,
    NotFoundError,
    ValidationError,
)

IMAGE = "image"
SEMANTIC = "semantic"
IDENTITY = "identity"
PSEUDO_QUERY = "pseudo_query"

NODE_KINDS = (IMAGE, SEMANTIC, IDENTITY, PSEUDO_QUERY)

DESCRIBES = "describes"
CONTAINS = "contains"
BELONGS_TO = "belongs_to"
SAME_AS = "same_as"
REFINES = "refines"
CONTRADICTS = "contradicts"

VALID_RELATIONS = frozenset(
    {DESCRIBES, CONTAINS, BELONGS_TO, SAME_AS, REFINES, CONTRADICTS}
)

SNAPSHOT_VERSION = 1
DEFAULT_THETA = 0.5


@dataclass(frozen=True, order=True)
class NodeId:
    kind: str
    key: str

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValidationError(f"unknown node kind {self.kind!r}")
        # hashed on every edge-set operation; precompute once
        object.__setattr__(self, "_hash", hash((self.kind, self.key)))

    def __hash__(self):
        return self._hash


@dataclass(frozen=True)
class NodePayload:
    """What a node carries: slot/phrase for semantic nodes, an embedding when
    the provider supplied one, and the image keys that introduced it."""

    slot: str | None = None
    phrase: str | None = None
    embedding: np.ndarray | None = None
    sources: frozenset = frozenset()

    def same_content(self, other: "NodePayload") -> bool:
        if self.slot != other.slot or self.phrase != other.phrase:
            return False
        if (self.embedding is None) != (other.embedding is None):
            return False
        if self.embedding is not None and not np.array_equal(
            self.embedding, other.embedding
        ):
            return False
        return True

    def merged_with(self, other: "NodePayload") -> "NodePayload":
        if not self.same_content(other):
            raise ConflictError("conflicting payloads for one node id")
        return replace(self, sources=self.sources | other.sources)


Edge = tuple[NodeId, str, NodeId]


def assign_identity(image_bytes: bytes) -> str:
    """Stable 64-bit content hash of the image, rendered as 16 hex chars."""
    if not image_bytes:
        raise ValidationError("cannot hash empty image content")
    return hashlib.blake2b(image_bytes, digest_size=8).hexdigest()


@dataclass
class SemanticGraph:
    nodes: dict = field(default_factory=dict)  # NodeId -> NodePayload
    edges: set = field(default_factory=set)  # {(src, rel, dst)}
    pseudo_sessions: dict = field(default_factory=dict)  # session_id -> [NodeId]

    def __eq__(self, other):
        if not isinstance(other, SemanticGraph):
            return NotImplemented
        if self.edges != other.edges or set(self.nodes) != set(other.nodes):
            return False
        return all(
            self.nodes[nid].same_content(other.nodes[nid])
            and self.nodes[nid].sources == other.nodes[nid].sources
            for nid in self.nodes
        )

    # -- structure -----------------------------------------------------

    @property
    def identity_index(self) -> dict:
        """vid -> set of nodes attached to that identity via belongs_to."""
        index: dict[str, set] = {
            nid.key: {nid} for nid in self.nodes if nid.kind == IDENTITY
        }
        for src, rel, dst in self.edges:
            if rel == BELONGS_TO and dst.kind == IDENTITY:
                index.setdefault(dst.key, {NodeId(IDENTITY, dst.key)}).add(src)
        return index

    def identities(self) -> set:
        return {nid.key for nid in self.nodes if nid.kind == IDENTITY}

    def add_node(self, nid: NodeId, payload: NodePayload | None = None) -> None:
        payload = payload or NodePayload()
        existing = self.nodes.get(nid)
        self.nodes[nid] = payload if existing is None else existing.merged_with(payload)

    def add_edge(self, src: NodeId, rel: str, dst: NodeId) -> None:
        if rel not in VALID_RELATIONS:
            raise InvalidRelationError(f"relation {rel!r} not in valid set")
        if src not in self.nodes or dst not in self.nodes:
            raise NotFoundError("edge endpoints must exist before linking")
        self.edges.add((src, rel, dst))

    def remove_node(self, nid: NodeId) -> None:
        self.remove_nodes([nid])

    def remove_nodes(self, nids) -> None:
        doomed = set(nids)
        touched = False
        for nid in doomed:
            if self.nodes.pop(nid, None) is not None:
                touched = True
        if touched:
            self.edges = {
                e for e in self.edges if e[0] not in doomed and e[2] not in doomed
            }

    def semantic_nodes(self):
        return [
            (nid, p)
            for nid, p in self.nodes.items()
            if nid.kind == SEMANTIC and p.phrase is not None
        ]

    def copy(self) -> "SemanticGraph":
        g = SemanticGraph(dict(self.nodes), set(self.edges))
        g.pseudo_sessions = {k: list(v) for k, v in self.pseudo_sessions.items()}
        return g


# --------------------------------------------------------------------------
# construction


def phrase_node_id(vid: str, slot: str, phrase: str) -> NodeId:
    return NodeId(SEMANTIC, f"{vid}/{slot}/{phrase}")


def slot_node_id(vid: str, slot: str) -> NodeId:
    return NodeId(SEMANTIC, f"{vid}/{slot}")


def build_single_graph(
    image_key: str,
    vid: str,
    y_ori,
    y_ren,
    encoder=None,
) -> SemanticGraph:
    """Single-image graph: image, identity, slot and phrase nodes.

    Edges: image -describes-> slot, slot -contains-> phrase, and belongs_to
    from the image and every semantic node to the identity.  Duplicate
    phrases across the two descriptions share one node.
    """
    descriptions = [d for d in (y_ori, y_ren) if d is not None and not d.is_empty()]
    if not descriptions:
        raise ValidationError("both descriptions empty")
    g = SemanticGraph()
    img = NodeId(IMAGE, image_key)
    ident = NodeId(IDENTITY, vid)
    g.add_node(img, NodePayload(sources=frozenset({image_key})))
    g.add_node(ident)
    g.add_edge(img, BELONGS_TO, ident)
    for desc in descriptions:
        for slot, phrase in desc.phrases():
            snode = slot_node_id(vid, slot)
            pnode = phrase_node_id(vid, slot, phrase)
            g.add_node(snode, NodePayload(slot=slot, sources=frozenset({image_key})))
            emb = encoder.embed_text(phrase) if encoder is not None else None
            g.add_node(
                pnode,
                NodePayload(
                    slot=slot,
                    phrase=phrase,
                    embedding=emb,
                    sources=frozenset({image_key}),
                ),
            )
            g.add_edge(img, DESCRIBES, snode)
            g.add_edge(snode, CONTAINS, pnode)
            g.add_edge(snode, BELONGS_TO, ident)
            g.add_edge(pnode, BELONGS_TO, ident)
    return g


def aggregate_local(
    graphs,
    sim=cosine_sim,
    theta: float = DEFAULT_THETA,
    cross_slot: bool = False,
) -> SemanticGraph:
    """Union the per-image graphs of one identity and add weak same_as edges
    between attribute nodes from different source images whose similarity
    strictly exceeds theta."""
    graphs = list(graphs)
    if not graphs:
        raise ValidationError("nothing to aggregate")
    idents = set()
    for g in graphs:
        idents |= g.identities()
    if len(idents) != 1:
        raise IdentityMismatchError(f"expected one identity, got {sorted(idents)}")
    merged = merge_global(graphs)
    sem = [
        (nid, p) for nid, p in merged.semantic_nodes() if p.embedding is not None
    ]
    sem.sort(key=lambda item: item[0])
    for i, (nid_a, pa) in enumerate(sem):
        for nid_b, pb in sem[i + 1 :]:
            if not cross_slot and pa.slot != pb.slot:
                continue
            # only across different source images
            if not (pa.sources - pb.sources) and not (pb.sources - pa.sources):
                continue
            if sim(pa.embedding, pb.embedding) > theta:
                merged.add_edge(nid_a, SAME_AS, nid_b)
    return merged


def merge_global(graphs) -> SemanticGraph:
    """Set-union merge of subgraphs; commutative, associative, idempotent."""
    out = SemanticGraph()
    for g in graphs:
        for nid, payload in g.nodes.items():
            out.add_node(nid, payload)
        out.edges |= g.edges
    return out


def attach_feedback(
    g: SemanticGraph,
    vid: str,
    phrase: str,
    slot: str,
    rel: str,
    anchor: NodeId | None = None,
    embedding=None,
) -> SemanticGraph:
    """Attach a feedback entity to an identity: new phrase node, a typed edge
    to the anchor (defaults to the identity node), and a belongs_to edge."""
    if rel not in VALID_RELATIONS:
        raise InvalidRelationError(f"relation {rel!r} not in valid set")
    ident = NodeId(IDENTITY, vid)
    if ident not in g.nodes:
        raise NotFoundError(f"unknown identity {vid!r}")
    if anchor is None:
        anchor = ident
    elif anchor not in g.nodes:
        raise NotFoundError(f"anchor node {anchor} not in graph")
    node = phrase_node_id(vid, slot, phrase)
    emb = None if embedding is None else np.asarray(embedding, dtype=np.float32)
    g.add_node(node, NodePayload(slot=slot, phrase=phrase, embedding=emb))
    g.add_edge(node, rel, anchor)
    g.add_edge(node, BELONGS_TO, ident)
    return g


# --------------------------------------------------------------------------
# persistence


def _node_to_json(nid: NodeId, payload: NodePayload) -> dict:
    return {
        "kind": nid.kind,
        "key": nid.key,
        "slot": payload.slot,
        "phrase": payload.phrase,
        "embedding": None
        if payload.embedding is None
        else [float(x) for x in payload.embedding],
        "sources": sorted(payload.sources),
    }


def snapshot(g: SemanticGraph, path) -> None:
    doc = {
        "version": SNAPSHOT_VERSION,
        "nodes": [_node_to_json(nid, g.nodes[nid]) for nid in sorted(g.nodes)],
        "edges": [
            [src.kind, src.key, rel, dst.kind, dst.key]
            for src, rel, dst in sorted(g.edges)
        ],
        "identities": {
            vid: sorted([n.kind, n.key] for n in nodes)
            for vid, nodes in sorted(g.identity_index.items())
        },
        "pseudo_sessions": {
            sid: [[n.kind, n.key] for n in nodes]
            for sid, nodes in sorted(g.pseudo_sessions.items())
        },
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_snapshot(path) -> SemanticGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable snapshot: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != SNAPSHOT_VERSION:
        raise FormatError("snapshot missing version marker")
    g = SemanticGraph()
    try:
        for n in doc["nodes"]:
            emb = (
                None
                if n["embedding"] is None
                else np.asarray(n["embedding"], dtype=np.float32)
            )
            g.add_node(
                NodeId(n["kind"], n["key"]),
                NodePayload(
                    slot=n["slot"],
                    phrase=n["phrase"],
                    embedding=emb,
                    sources=frozenset(n["sources"]),
                ),
            )
        for src_kind, src_key, rel, dst_kind, dst_key in doc["edges"]:
            g.add_edge(NodeId(src_kind, src_key), rel, NodeId(dst_kind, dst_key))
        for sid, nodes in doc.get("pseudo_sessions", {}).items():
            g.pseudo_sessions[sid] = [NodeId(kind, key) for kind, key in nodes]
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise FormatError(f"malformed snapshot: {exc}") from exc
    return g
