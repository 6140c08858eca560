"""Multi-turn retrieval sessions.

A session owns the evolving query: round 0 parses and embeds the initial
description, each later round folds one piece of user feedback into the
cumulative description (latest feedback wins inside a slot on direct
conflict), expands the graph for confirmed identities, and re-runs the
hierarchical retrieval.  Pseudo-query nodes are ephemeral and removed at
close, restoring the graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .encoders import cosine_sim
from .errors import NotFoundError, SessionClosedError, ValidationError
from .fcd import (
    SLOTS,
    StructuredDescription,
    parse_structured_description,
)
from .graph import (
    CONTAINS,
    DESCRIBES,
    REFINES,
    SAME_AS,
    NodeId,
    SemanticGraph,
    attach_feedback,
    phrase_node_id,
)
from .qhr import (
    CandidateMatrix,
    FusionWeights,
    Query,
    insert_pseudo_query_nodes,
    remove_pseudo_query_nodes,
    retrieve,
)


def _words(phrase: str) -> set:
    return set(phrase.split())


def merge_feedback(current: StructuredDescription, update: StructuredDescription):
    """Fold feedback into the cumulative description.

    Non-conflicting phrases accumulate; a new phrase that shares a content
    word with an existing phrase in the same slot is a direct conflict and
    replaces it (latest wins).  Returns (merged, conflicts) where conflicts
    lists (slot, old_phrase, new_phrase).
    """
    slots = {}
    conflicts = []
    for slot in SLOTS:
        phrases = list(current.slot(slot))
        for new in update.slot(slot):
            if new in phrases:
                continue
            clash = next(
                (p for p in phrases if _words(p) & _words(new)), None
            )
            if clash is not None:
                phrases[phrases.index(clash)] = new
                conflicts.append((slot, clash, new))
            else:
                phrases.append(new)
        slots[slot] = tuple(phrases)
    return StructuredDescription(**slots), conflicts


@dataclass
class RetrievalSession:
    session_id: str
    q0: str
    t0: str = ""
    r: int = 0
    cumulative: StructuredDescription | None = None
    feedback_history: list = field(default_factory=list)  # (text, parsed)
    rankings: list = field(default_factory=list)  # per-round ScoredCandidate lists
    revealed: set = field(default_factory=set)
    conflicts: list = field(default_factory=list)
    closed: bool = False

    def context_texts(self):
        """The revised query C_r: (T_0, Q_0, A_0, ..., A_r)."""
        return (self.t0, self.q0, *[t for t, _ in self.feedback_history])

    def report(self) -> dict:
        rounds = []
        for i, ranking in enumerate(self.rankings):
            feedback = self.feedback_history[i - 1][0] if i >= 1 else None
            rounds.append(
                {
                    "r": i,
                    "feedback": feedback,
                    "ranking": [
                        {
                            "image_key": sc.image_key,
                            "identity": sc.identity,
                            "rank": sc.rank,
                            "scores": {
                                "s_txt": sc.s_txt,
                                "s_img": sc.s_img,
                                "s_init": sc.s_init,
                                "s_sctxt": sc.s_sctxt,
                                "s_final": sc.s_final,
                            },
                        }
                        for sc in ranking
                    ],
                }
            )
        return {
            "session_id": self.session_id,
            "rounds": rounds,
            "revealed": sorted(self.revealed),
            "closed": self.closed,
        }


class Engine:
    """Ties an index, an encoder, and fusion weights into a session host."""

    def __init__(self, index, encoder, weights: FusionWeights | None = None,
                 top_n: int = 50):
        self.index = index
        self.encoder = encoder
        self.weights = weights or FusionWeights()
        self.top_n = top_n
        self.sessions: dict[str, RetrievalSession] = {}
        self._ids = itertools.count()
        self._matrix: CandidateMatrix | None = None
        self._matrix_for: int | None = None

    # -- helpers -------------------------------------------------------

    @property
    def graph(self) -> SemanticGraph:
        return self.index.graph

    def embed_query(self, desc: StructuredDescription) -> Query:
        txt = self.encoder.embed_bag(desc.tokens())
        sctxt = []
        for slot in SLOTS:
            phrases = desc.slot(slot)
            if phrases:
                tokens = [t for p in phrases for t in p.split()]
                sctxt.append((slot, self.encoder.embed_bag(tokens)))
        return Query(txt=txt, sctxt=tuple(sctxt))

    def _open(self, session_id: str) -> RetrievalSession:
        try:
            s = self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}")
        if s.closed:
            raise SessionClosedError(f"session {session_id!r} is closed")
        return s

    def _run_round(self, s: RetrievalSession) -> None:
        query = self.embed_query(s.cumulative)
        if s.session_id in self.graph.pseudo_sessions:
            remove_pseudo_query_nodes(self.graph, s.session_id)
        insert_pseudo_query_nodes(self.graph, query, s.session_id)
        if self._matrix is None or self._matrix_for != id(self.index.candidates):
            self._matrix = CandidateMatrix(self.index.candidates)
            self._matrix_for = id(self.index.candidates)
        s.rankings.append(retrieve(query, self._matrix, self.weights, self.top_n))

    # -- protocol ------------------------------------------------------

    def start_session(self, q0: str, session_id: str | None = None,
                      t0: str = "") -> RetrievalSession:
        if not q0 or not q0.strip():
            raise ValidationError("initial query must be non-empty")
        desc = parse_structured_description(q0)
        if session_id is None:
            session_id = f"s{next(self._ids):06d}"
        s = RetrievalSession(session_id=session_id, q0=q0, t0=t0, cumulative=desc)
        self._run_round(s)
        self.sessions[session_id] = s
        return s

    def submit_feedback(self, session_id: str, text: str) -> RetrievalSession:
        s = self._open(session_id)
        parsed = parse_structured_description(text)
        merged, conflicts = merge_feedback(s.cumulative, parsed)
        s.cumulative = merged
        s.conflicts.extend(conflicts)
        s.feedback_history.append((text, parsed))
        self._expand_graph(s, parsed, conflicts)
        self._run_round(s)
        s.r += 1
        return s

    def _expand_graph(self, s: RetrievalSession, parsed, conflicts) -> None:
        """Attach feedback entities for confirmed (revealed) identities only;
        unconfirmed feedback lives solely in the cumulative query."""
        replaced = {(slot, new): old for slot, old, new in conflicts}
        vids = set()
        for key in s.revealed:
            vids.add(self.index.by_key(key).identity)
        for vid in sorted(vids):
            for slot, phrase in parsed.phrases():
                emb = self.encoder.embed_text(phrase)
                old = replaced.get((slot, phrase))
                anchor, rel = self._anchor_for(vid, slot, old, emb)
                attach_feedback(
                    self.graph, vid, phrase, slot, rel,
                    anchor=anchor, embedding=emb,
                )

    def _anchor_for(self, vid: str, slot: str, replaced_phrase, emb):
        if replaced_phrase is not None:
            old_node = phrase_node_id(vid, slot, replaced_phrase)
            if old_node in self.graph.nodes:
                return old_node, REFINES
        best, best_sim = None, -2.0
        for nid, payload in self.graph.semantic_nodes():
            if payload.slot != slot or payload.embedding is None:
                continue
            if not nid.key.startswith(f"{vid}/"):
                continue
            sim = cosine_sim(payload.embedding, emb)
            if sim > best_sim:
                best, best_sim = nid, sim
        if best is not None:
            return best, SAME_AS
        return None, DESCRIBES  # anchor defaults to the identity node

    def reveal_answer(self, session_id: str, image_key: str) -> RetrievalSession:
        s = self._open(session_id)
        self.index.by_key(image_key)  # raises NotFoundError for unknown keys
        s.revealed.add(image_key)
        return s

    def get_report(self, session_id: str) -> dict:
        try:
            return self.sessions[session_id].report()
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}")

    def close_session(self, session_id: str) -> dict:
        s = self._open(session_id)
        if s.session_id in self.graph.pseudo_sessions:
            remove_pseudo_query_nodes(self.graph, s.session_id)
        s.closed = True
        return s.report()
