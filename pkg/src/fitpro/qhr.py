"""Query-aware hierarchical retrieval.

Coarse stage: per-candidate text and image similarities fused into an initial
score, then top-N selection.  Fine stage: per-slot semantic matching against
the query's context nodes, mixed back into the final ranking.  All scoring is
pure; only pseudo-query node insertion touches the graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .encoders import cosine_sim
from .errors import ConflictError, NotFoundError, ValidationError, WeightError
from .fcd import SLOTS
from .graph import PSEUDO_QUERY, NodeId, NodePayload, SemanticGraph

DEFAULT_TOP_N = 50
WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class FusionWeights:
    """Mixing constants for the retrieval cascade.

    gamma fuses modalities inside one similarity; alpha/beta balance the text
    and image scores (must sum to 1); eta mixes the coarse score with the
    hierarchical semantic score; w gives per-slot importance (sums to 1).
    """

    gamma: float = 0.5
    alpha: float = 0.5
    beta: float = 0.5
    eta: float = 0.5
    w: dict = field(
        default_factory=lambda: {s: 0.25 for s in SLOTS}
    )

    def __post_init__(self):
        if abs(self.alpha + self.beta - 1.0) > WEIGHT_TOL:
            raise WeightError(f"alpha + beta must be 1, got {self.alpha + self.beta}")
        if set(self.w) != set(SLOTS):
            raise ValidationError(f"slot weights must cover {SLOTS}")
        if abs(sum(self.w.values()) - 1.0) > WEIGHT_TOL:
            raise WeightError(f"slot weights must sum to 1, got {sum(self.w.values())}")
        for name in ("gamma", "eta"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise WeightError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class Query:
    """Embedded query: optional visual part, textual part, and per-slot
    semantic context vectors."""

    txt: np.ndarray
    img: np.ndarray | None = None
    sctxt: tuple = ()  # ((slot, vector), ...)

    def __post_init__(self):
        for slot, _ in self.sctxt:
            if slot not in SLOTS:
                raise ValidationError(f"unknown slot {slot!r} in query context")

    @property
    def visual(self) -> np.ndarray:
        """Vector used against candidate images; falls back to the text
        embedding for text-only (zero-shot) queries."""
        return self.txt if self.img is None else self.img


@dataclass(frozen=True)
class Candidate:
    """One indexed gallery instance."""

    image_key: str
    identity: str
    img_embedding: np.ndarray
    txt_embedding: np.ndarray
    sctxt: dict = field(default_factory=dict)  # slot -> embedding


@dataclass(frozen=True)
class ScoredCandidate:
    identity: str
    image_key: str
    s_txt: float = 0.0
    s_img: float = 0.0
    s_init: float = 0.0
    s_sctxt: float = 0.0
    s_final: float = 0.0
    rank: int = 0


def query_similarity(q: Query, cand_img, cand_txt, gamma: float) -> float:
    """Modality-fused similarity: gamma * Sim(Q, img) + (1-gamma) * Sim(Q, txt)."""
    if not (0.0 <= gamma <= 1.0):
        raise WeightError(f"gamma must be in [0, 1], got {gamma}")
    return gamma * cosine_sim(q.visual, cand_img) + (1.0 - gamma) * cosine_sim(
        q.txt, cand_txt
    )


def initial_score(s_txt: float, s_img: float, w: FusionWeights) -> float:
    """Coarse score: alpha * s_txt + beta * s_img with alpha + beta = 1."""
    return w.alpha * s_txt + w.beta * s_img


def select_top_n(scored, n: int):
    """n highest s_init; ties broken by ascending image_key."""
    if n < 1:
        raise ValidationError("top-n requires n >= 1")
    ordered = sorted(scored, key=lambda c: (-c.s_init, c.image_key))
    return ordered[:n]


def hierarchical_score(q: Query, cand_sctxt: dict, w: FusionWeights) -> float:
    """Per-slot semantic match: sum_k w_k * Sim(query slot k, candidate slot k).

    A slot missing on either side contributes similarity 0 (undescribed
    attributes are penalized, not renormalized away).
    """
    query_slots = dict(q.sctxt)
    for slot in cand_sctxt:
        if slot not in SLOTS:
            raise ValidationError(f"unknown slot {slot!r} on candidate")
    total = 0.0
    for slot in SLOTS:
        qv = query_slots.get(slot)
        cv = cand_sctxt.get(slot)
        if qv is None or cv is None:
            continue
        total += w.w[slot] * cosine_sim(qv, cv)
    return total


def rerank(top_n, q: Query, w: FusionWeights):
    """Final ranking: s_final = eta * s_init + (1-eta) * s_sctxt, descending,
    ties by image_key, ranks assigned 1..n."""
    rescored = [
        replace(c, s_final=w.eta * c.s_init + (1.0 - w.eta) * c.s_sctxt)
        for c in top_n
    ]
    rescored.sort(key=lambda c: (-c.s_final, c.image_key))
    return [replace(c, rank=i + 1) for i, c in enumerate(rescored)]


class CandidateMatrix:
    """Stacked gallery embeddings for batched scoring.

    Numerically identical to scoring candidates one by one (same cosine
    definition, 64-bit accumulation), just without per-candidate overhead.
    """

    def __init__(self, candidates):
        self.candidates = list(candidates)
        n = len(self.candidates)
        if n == 0:
            return
        self.txt = np.stack(
            [np.asarray(c.txt_embedding, dtype=np.float64) for c in self.candidates]
        )
        self.img = np.stack(
            [np.asarray(c.img_embedding, dtype=np.float64) for c in self.candidates]
        )
        self.txt_norm = np.linalg.norm(self.txt, axis=1)
        self.img_norm = np.linalg.norm(self.img, axis=1)
        dim = self.txt.shape[1]
        self.slot_mat: dict[str, np.ndarray] = {}
        self.slot_mask: dict[str, np.ndarray] = {}
        self.slot_norm: dict[str, np.ndarray] = {}
        for slot in SLOTS:
            mat = np.zeros((n, dim))
            mask = np.zeros(n, dtype=bool)
            for i, c in enumerate(self.candidates):
                vec = c.sctxt.get(slot)
                if vec is not None:
                    mat[i] = np.asarray(vec, dtype=np.float64)
                    mask[i] = True
            norm = np.linalg.norm(mat, axis=1)
            norm[~mask] = 1.0
            self.slot_mat[slot] = mat
            self.slot_mask[slot] = mask
            self.slot_norm[slot] = norm

    def _sims(self, vec, mat, norms) -> np.ndarray:
        v = np.asarray(vec, dtype=np.float64)
        return np.clip(mat @ v / (norms * np.linalg.norm(v)), -1.0, 1.0)

    def coarse(self, q: Query, w: FusionWeights):
        s_txt = self._sims(q.txt, self.txt, self.txt_norm)
        s_img = self._sims(q.visual, self.img, self.img_norm)
        return [
            ScoredCandidate(
                identity=c.identity,
                image_key=c.image_key,
                s_txt=float(s_txt[i]),
                s_img=float(s_img[i]),
                s_init=initial_score(float(s_txt[i]), float(s_img[i]), w),
            )
            for i, c in enumerate(self.candidates)
        ]

    def semantic(self, q: Query, w: FusionWeights) -> np.ndarray:
        total = np.zeros(len(self.candidates))
        for slot, qv in dict(q.sctxt).items():
            mask = self.slot_mask[slot]
            sims = self._sims(qv, self.slot_mat[slot], self.slot_norm[slot])
            total += w.w[slot] * np.where(mask, sims, 0.0)
        return total


def score_candidates(q: Query, candidates, w: FusionWeights):
    """Coarse scoring of the whole gallery (text/image components fused by
    alpha/beta)."""
    out = []
    for cand in candidates:
        s_txt = cosine_sim(q.txt, cand.txt_embedding)
        s_img = cosine_sim(q.visual, cand.img_embedding)
        out.append(
            ScoredCandidate(
                identity=cand.identity,
                image_key=cand.image_key,
                s_txt=s_txt,
                s_img=s_img,
                s_init=initial_score(s_txt, s_img, w),
            )
        )
    return out


def retrieve(
    q: Query,
    candidates,
    w: FusionWeights,
    top_n: int = DEFAULT_TOP_N,
):
    """Full cascade: coarse score, top-N selection, per-slot hierarchical
    scoring, then the eta-mixed re-rank."""
    cm = candidates if isinstance(candidates, CandidateMatrix) else CandidateMatrix(
        candidates
    )
    if not cm.candidates:
        return []
    coarse = cm.coarse(q, w)
    selected = select_top_n(coarse, top_n)
    sem = cm.semantic(q, w)
    pos = {c.image_key: i for i, c in enumerate(cm.candidates)}
    enriched = [
        replace(sc, s_sctxt=float(sem[pos[sc.image_key]])) for sc in selected
    ]
    return rerank(enriched, q, w)


# --------------------------------------------------------------------------
# pseudo-query graph nodes


def insert_pseudo_query_nodes(g: SemanticGraph, q: Query, session_id: str):
    """Insert one ephemeral pseudo-query node per query context vector.

    The nodes are tagged to the session for one-call removal at close and
    never receive belongs_to edges to real identities.
    """
    if session_id in g.pseudo_sessions:
        raise ConflictError(f"session {session_id!r} already has pseudo nodes")
    ids = []
    for i, (slot, vec) in enumerate(q.sctxt):
        nid = NodeId(PSEUDO_QUERY, f"{session_id}/{slot}/{i}")
        g.add_node(
            nid,
            NodePayload(slot=slot, embedding=np.asarray(vec, dtype=np.float32)),
        )
        ids.append(nid)
    g.pseudo_sessions[session_id] = list(ids)
    return ids


def remove_pseudo_query_nodes(g: SemanticGraph, session_id: str) -> None:
    if session_id not in g.pseudo_sessions:
        raise NotFoundError(f"no pseudo nodes for session {session_id!r}")
    g.remove_nodes(g.pseudo_sessions.pop(session_id))
