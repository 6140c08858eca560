"""Evaluation harness: Rank-K, mAP, POPE probes, the scripted user, and the
multi-round benchmark driver.

Ground-truth identity labels are read from the manifest here and nowhere
else; the index and the session engine only ever see hash-based pseudo-IDs.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field

from .errors import AttributesExhausted, ValidationError
from .fcd import SLOTS
from .index import build_index, entry_image_key
from .ingest import DatasetManifest, ManifestEntry
from .qhr import FusionWeights
from .session import Engine

RANK_KS = (1, 5, 10)

PRECISION_UNDEFINED = -1.0  # sentinel when nothing was predicted yes


# --------------------------------------------------------------------------
# metrics


def rank_k(first_hit_ranks, k: int) -> float:
    """Percent of queries whose first correct hit is at rank <= k."""
    ranks = list(first_hit_ranks)
    if not ranks:
        raise ValidationError("rank_k needs at least one query")
    if any(r < 1 for r in ranks):
        raise ValidationError("ranks must be >= 1")
    return 100.0 * sum(1 for r in ranks if r <= k) / len(ranks)


def average_precision(relevance) -> float:
    """AP of one ranked list: mean over relevant items of the precision at
    that item's rank."""
    hits = 0
    precisions = []
    for i, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            precisions.append(hits / i)
    if not precisions:
        raise ValidationError("query with no relevant items")
    return sum(precisions) / len(precisions)


def mean_ap(rankings) -> float:
    """Mean AP over per-query ranked relevance lists, as a percent."""
    rankings = list(rankings)
    if not rankings:
        raise ValidationError("mean_ap needs at least one query")
    return 100.0 * sum(average_precision(r) for r in rankings) / len(rankings)


def pope_metrics(probe_answers) -> tuple[float, float]:
    """(accuracy, precision) over (predicted yes/no, truth yes/no) probes.

    Precision is the undefined sentinel when nothing was predicted yes.
    """
    probes = list(probe_answers)
    if not probes:
        raise ValidationError("no POPE probes")
    correct = sum(1 for pred, truth in probes if pred == truth)
    predicted_yes = sum(1 for pred, _ in probes if pred)
    true_yes = sum(1 for pred, truth in probes if pred and truth)
    accuracy = correct / len(probes)
    precision = (
        PRECISION_UNDEFINED if predicted_yes == 0 else true_yes / predicted_yes
    )
    return accuracy, precision


def build_pope_probes(entry: ManifestEntry, vocabulary: dict, rng: random.Random):
    """Probe set for one entry: every present attribute (truth yes) plus an
    equal number of sampled absent attributes (truth no)."""
    present = [(slot, tok) for slot in SLOTS for tok in entry.attributes.get(slot, ())]
    absent_pool = [
        (slot, tok)
        for slot in SLOTS
        for tok in vocabulary.get(slot, ())
        if tok not in entry.attributes.get(slot, ())
    ]
    absent = rng.sample(absent_pool, min(len(present), len(absent_pool)))
    return [(slot, tok, True) for slot, tok in present] + [
        (slot, tok, False) for slot, tok in absent
    ]


# --------------------------------------------------------------------------
# scripted user


class ScriptedUser:
    """Deterministic simulated user: reveals one unrevealed true attribute
    per call, rendered as slot-delimited feedback text."""

    def __init__(self, truth_attributes: dict, seed: int = 0):
        self._remaining = [
            (slot, tok)
            for slot in SLOTS
            for tok in truth_attributes.get(slot, ())
        ]
        random.Random(seed).shuffle(self._remaining)
        self.revealed: list = []

    def next_feedback(self) -> str:
        if not self._remaining:
            raise AttributesExhausted("no unrevealed attributes left")
        slot, tok = self._remaining.pop()
        self.revealed.append((slot, tok))
        return f"{slot.capitalize()}: {tok}"


# --------------------------------------------------------------------------
# benchmark


@dataclass
class EvalResult:
    per_round: list = field(default_factory=list)  # [{"r", "rank_k", "map"}]
    mean_target_rank: list = field(default_factory=list)  # per-session trajectories

    @property
    def rounds(self) -> int:
        return len(self.per_round)

    def final(self) -> dict:
        return self.per_round[-1]

    def to_json(self) -> dict:
        return {
            "rounds": self.per_round,
            "mean_target_rank": self.mean_target_rank,
        }

    def write_report(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    def write_curve_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "rank1", "rank5", "rank10", "map"])
            for row in self.per_round:
                writer.writerow(
                    [row["r"]] + [row["rank_k"][str(k)] for k in RANK_KS]
                    + [row["map"]]
                )


def _initial_description(entry: ManifestEntry) -> str:
    if entry.descriptions:
        return entry.descriptions[0]
    parts = [
        f"{slot.capitalize()}: {', '.join(entry.attributes[slot])}"
        for slot in SLOTS
        if entry.attributes.get(slot)
    ]
    return " | ".join(parts)


def run_benchmark(
    manifest: DatasetManifest,
    rounds: int,
    weights: FusionWeights | None = None,
    seed: int = 0,
    encoder=None,
    top_n: int | None = None,
    queries_limit: int | None = None,
) -> EvalResult:
    """One session per ground-truth identity: round 0 from a single
    description, then `rounds` scripted-user refinements.

    Per round the harness reveals at most one correct answer (only a rank-1
    confirmed match); metrics are computed over the full rankings.
    """
    if rounds < 0:
        raise ValidationError("rounds must be >= 0")
    if encoder is None:
        from .encoders import MockEncoder

        encoder = MockEncoder(seed=seed, dim=64)
    weights = weights or FusionWeights()
    index = build_index(manifest, encoder)
    labels = {entry_image_key(e): e.identity_label for e in manifest.entries}

    by_label: dict[str, list] = {}
    for e in manifest.entries:
        by_label.setdefault(e.identity_label, []).append(e)
    query_labels = sorted(by_label)
    if queries_limit is not None:
        query_labels = query_labels[:queries_limit]

    gallery_size = len(index.candidates)
    n = top_n if top_n is not None else gallery_size
    # per_query[q][r] -> relevance list; trajectories[q][r] -> mean target rank
    per_query_rel: list = []
    trajectories: list = []

    for qi, label in enumerate(query_labels):
        engine = Engine(index, encoder, weights, top_n=n)
        views = by_label[label]
        user = ScriptedUser(views[0].attributes, seed=seed + qi)
        session = engine.start_session(_initial_description(views[0]))
        rel_rounds = []
        rank_rounds = []
        exhausted = False
        for r in range(rounds + 1):
            if r > 0:
                if not exhausted:
                    try:
                        feedback = user.next_feedback()
                        engine.submit_feedback(session.session_id, feedback)
                    except AttributesExhausted:
                        exhausted = True
            ranking = session.rankings[-1]
            relevance = [labels[sc.image_key] == label for sc in ranking]
            target_ranks = [sc.rank for sc in ranking
                            if labels[sc.image_key] == label]
            if not any(relevance):
                relevance = relevance + [True]  # truncated top-n: worst case
                target_ranks = [gallery_size]
            rel_rounds.append(relevance)
            rank_rounds.append(sum(target_ranks) / len(target_ranks))
            # confirm at most one correct answer per round
            top = ranking[0] if ranking else None
            if top is not None and labels[top.image_key] == label \
                    and top.image_key not in session.revealed:
                engine.reveal_answer(session.session_id, top.image_key)
        engine.close_session(session.session_id)
        per_query_rel.append(rel_rounds)
        trajectories.append(rank_rounds)

    result = EvalResult(mean_target_rank=trajectories)
    for r in range(rounds + 1):
        rel = [per_query_rel[q][r] for q in range(len(query_labels))]
        first_hits = [next(i + 1 for i, x in enumerate(rl) if x) for rl in rel]
        result.per_round.append(
            {
                "r": r,
                "rank_k": {str(k): rank_k(first_hits, k) for k in RANK_KS},
                "map": mean_ap(rel),
            }
        )
    return result


# --------------------------------------------------------------------------
# synthetic galleries


SLOT_VOCAB_SIZES = {"head": 10, "upper": 12, "lower": 12, "accessories": 10}

_SLOT_NOUNS = {
    "head": "hat",
    "upper": "jacket",
    "lower": "trousers",
    "accessories": "bag",
}


def slot_vocabulary(sizes: dict | None = None) -> dict:
    sizes = sizes or SLOT_VOCAB_SIZES
    return {
        slot: tuple(f"{_SLOT_NOUNS[slot]}{i:02d}" for i in range(sizes[slot]))
        for slot in SLOTS
    }


def make_synthetic_manifest(
    n_identities: int = 200,
    views: int = 3,
    seed: int = 0,
    vocab_sizes: dict | None = None,
) -> DatasetManifest:
    """Desk-scale gallery: each identity gets 2 attributes per slot (8 total)
    shared across its views; the initial description exposes only 2 of them,
    leaving 6 for the scripted user to reveal."""
    rng = random.Random(seed)
    vocab = slot_vocabulary(vocab_sizes)
    entries = []
    for ident in range(n_identities):
        attrs = {
            slot: tuple(rng.sample(vocab[slot], 2)) for slot in SLOTS
        }
        q0 = (
            f"Upper: {attrs['upper'][0]} | Lower: {attrs['lower'][0]}"
        )
        for view in range(views):
            entries.append(
                ManifestEntry(
                    image_path=f"synthetic/{ident:04d}_{view}.jpg",
                    identity_label=f"id{ident:04d}",
                    descriptions=(q0,),
                    attributes=attrs,
                )
            )
    return DatasetManifest(mode="cropped", entries=tuple(entries))
