"""Feature-contrastive decoding stage.

Covers the image-restoration contracts (feature fusion + deterministic DDIM
denoising), language-model prompt assembly, the contrastive-decoding token
combinator, and parsing of slot-structured pedestrian descriptions.

Real restorers and description generators plug in behind the NoisePredictor
and DescriptionGenerator protocols; the reference implementations here are
deterministic so the whole pipeline runs offline.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import (
    DimensionError,
    ParseError,
    ShapeError,
    SingularScheduleError,
    ValidationError,
)

UPSAMPLE_FACTOR = 4
DEFAULT_DENOISE_STEPS = 20

SLOTS = ("head", "upper", "lower", "accessories")

_SLOT_ALIASES = {
    "head": "head",
    "upper": "upper",
    "upper body": "upper",
    "lower": "lower",
    "lower body": "lower",
    "accessories": "accessories",
    "accessory": "accessories",
}


# --------------------------------------------------------------------------
# image restoration


@dataclass(frozen=True)
class AlphaSchedule:
    """Diffusion control parameters, indexed by timestep 0..T."""

    alphas: tuple[float, ...]

    def __post_init__(self):
        if len(self.alphas) < 1:
            raise ValidationError("schedule needs at least one alpha")
        for a in self.alphas:
            if not (0.0 < a <= 1.0):
                raise SingularScheduleError(f"alpha {a} outside (0, 1]")

    @property
    def steps(self) -> int:
        return len(self.alphas) - 1

    def alpha(self, t: int) -> float:
        if not (0 <= t <= self.steps):
            raise ValidationError(f"timestep {t} outside schedule 0..{self.steps}")
        return self.alphas[t]


class NoisePredictor(Protocol):
    def __call__(
        self, b_t: np.ndarray, i_sr: np.ndarray, prior_c: np.ndarray, t: int
    ) -> np.ndarray: ...


def zero_predictor(b_t, i_sr, prior_c, t):
    """Reference predictor: no noise."""
    return np.zeros_like(b_t)


def reconstruct(
    shallow: np.ndarray,
    deep: np.ndarray,
    fusion_kernel: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Fuse shallow and deep feature maps into a 4x-upsampled image field.

    The reference kernel is a nearest-neighbor x4 upsample of the elementwise
    sum; a learned fusion layer can be swapped in via ``fusion_kernel``.
    """
    f0 = np.asarray(shallow, dtype=np.float64)
    fd = np.asarray(deep, dtype=np.float64)
    if f0.shape[:2] != fd.shape[:2]:
        raise ShapeError(f"feature maps misaligned: {f0.shape} vs {fd.shape}")
    fused = f0 + fd
    if fusion_kernel is not None:
        return fusion_kernel(fused)
    return np.repeat(np.repeat(fused, UPSAMPLE_FACTOR, axis=0), UPSAMPLE_FACTOR, axis=1)


def ddim_step(
    b_t: np.ndarray,
    i_sr: np.ndarray,
    prior_c: np.ndarray,
    t: int,
    sched: AlphaSchedule,
    predictor: NoisePredictor,
) -> np.ndarray:
    """One deterministic denoising update from timestep t to t-1.

    B_{t-1} = sqrt(a_{t-1}) * (B_t - sqrt(1 - a_t)/sqrt(a_t) * eps).
    """
    if t < 1:
        raise ValidationError("ddim_step requires t >= 1")
    a_t = sched.alpha(t)
    a_prev = sched.alpha(t - 1)
    if a_t == 0.0:
        raise SingularScheduleError("alpha_t must be nonzero")
    b = np.asarray(b_t, dtype=np.float64)
    eps = np.asarray(predictor(b, i_sr, prior_c, t), dtype=np.float64)
    if eps.shape != b.shape:
        raise ShapeError(f"predictor returned shape {eps.shape}, expected {b.shape}")
    return math.sqrt(a_prev) * (b - (math.sqrt(1.0 - a_t) / math.sqrt(a_t)) * eps)


def run_denoise(
    image: np.ndarray,
    i_sr: np.ndarray,
    prior_c: np.ndarray,
    sched: AlphaSchedule,
    predictor: NoisePredictor = zero_predictor,
    steps: int = DEFAULT_DENOISE_STEPS,
) -> np.ndarray:
    """Iterate ddim_step from t=steps down to 1; the result is the restored image."""
    if steps < 0:
        raise ValidationError("steps must be non-negative")
    if sched.steps < steps:
        raise ValidationError(
            f"schedule covers {sched.steps} steps, {steps} requested"
        )
    b = np.asarray(image, dtype=np.float64)
    for t in range(steps, 0, -1):
        b = ddim_step(b, i_sr, prior_c, t, sched, predictor)
    return b


# --------------------------------------------------------------------------
# prompting and decoding


@dataclass(frozen=True)
class PromptSequence:
    """Ordered model input: system template, image tokens, object template."""

    system: str
    image_tokens: tuple
    object_template: str

    def segments(self):
        return (self.system, self.image_tokens, self.object_template)


def assemble_prompt(t_sys: str, x_tok: Sequence, t_obj: str) -> PromptSequence:
    if not t_sys or not t_obj:
        raise ValidationError("prompt templates must be non-empty")
    return PromptSequence(t_sys, tuple(x_tok), t_obj)


def contrastive_decode(
    p_struct: Sequence[float],
    p_plain: Sequence[float],
    lam: float = 0.1,
    beta_cd: float = 0.1,
) -> list[tuple[int, float]]:
    """Score tokens by contrasting the structure-guided distribution against
    the plain one.

    Candidates are tokens with p_struct >= beta_cd * max(p_struct) (adaptive
    plausibility cutoff); each scores log p_struct - lam * log p_plain.
    Returns (token, score) pairs sorted by score descending, ties by token id.
    """
    ps = np.asarray(p_struct, dtype=np.float64)
    pp = np.asarray(p_plain, dtype=np.float64)
    if ps.shape != pp.shape:
        raise DimensionError(f"vocab mismatch: {ps.shape} vs {pp.shape}")
    if not (0.0 <= lam <= 1.0):
        raise ValidationError("lambda must be in [0, 1]")
    if not (0.0 < beta_cd <= 1.0):
        raise ValidationError("beta_cd must be in (0, 1]")
    cutoff = beta_cd * ps.max()
    scored = []
    with np.errstate(divide="ignore"):
        log_ps = np.log(ps)
        log_pp = np.log(pp)
    for tok in np.flatnonzero(ps >= cutoff):
        scored.append((int(tok), float(log_ps[tok] - lam * log_pp[tok])))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


# --------------------------------------------------------------------------
# structured descriptions


@dataclass(frozen=True)
class StructuredDescription:
    """Four-slot attribute record: head, upper body, lower body, accessories."""

    head: tuple[str, ...] = ()
    upper: tuple[str, ...] = ()
    lower: tuple[str, ...] = ()
    accessories: tuple[str, ...] = ()
    raw_text: str = ""

    def slot(self, name: str) -> tuple[str, ...]:
        if name not in SLOTS:
            raise ValidationError(f"unknown slot {name!r}")
        return getattr(self, name)

    def slots(self):
        return {name: getattr(self, name) for name in SLOTS}

    def is_empty(self) -> bool:
        return not any(getattr(self, name) for name in SLOTS)

    def phrases(self) -> list[tuple[str, str]]:
        """All (slot, phrase) pairs in slot order."""
        return [(name, p) for name in SLOTS for p in getattr(self, name)]

    def tokens(self) -> list[str]:
        out = []
        for _, phrase in self.phrases():
            out.extend(phrase.split())
        return out


def _normalize_phrases(raw: str) -> tuple[str, ...]:
    phrases = []
    for chunk in re.split(r"[,;]", raw):
        phrase = " ".join(chunk.strip().lower().split())
        if phrase and phrase not in phrases:
            phrases.append(phrase)
    return tuple(phrases)


_SLOT_RE = re.compile(
    r"(head|upper body|upper|lower body|lower|accessories|accessory)\s*:",
    re.IGNORECASE,
)


def parse_structured_description(text: str) -> StructuredDescription:
    """Parse the slot-delimited generator output.

    Accepts "Head: ... | Upper: ... | Lower: ... | Accessories: ..." with any
    subset of slots present; phrases split on commas/semicolons, lowercased.
    """
    if text is None:
        raise ParseError("no text")
    matches = list(_SLOT_RE.finditer(text))
    if not matches:
        raise ParseError(f"no recognizable slot labels in {text!r}")
    slots: dict[str, tuple[str, ...]] = {name: () for name in SLOTS}
    for i, m in enumerate(matches):
        slot = _SLOT_ALIASES[m.group(1).lower()]
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        raw = text[m.end() : end].strip().strip("|").strip()
        if raw:
            merged = list(slots[slot])
            for p in _normalize_phrases(raw):
                if p not in merged:
                    merged.append(p)
            slots[slot] = tuple(merged)
    desc = StructuredDescription(raw_text=text, **slots)
    if desc.is_empty():
        raise ParseError(f"slots present but all empty in {text!r}")
    return desc


def serialize_description(desc: StructuredDescription) -> str:
    """Inverse of parse_structured_description on slot contents."""
    parts = []
    for name in SLOTS:
        phrases = getattr(desc, name)
        parts.append(f"{name.capitalize()}: {', '.join(phrases)}")
    return " | ".join(parts)


class DescriptionGenerator(Protocol):
    def describe(self, image_key: str) -> StructuredDescription: ...


@dataclass
class TemplateGenerator:
    """Deterministic stand-in generator: serves descriptions from a lookup
    table of per-image ground-truth attributes."""

    table: dict[str, StructuredDescription] = field(default_factory=dict)

    def describe(self, image_key: str) -> StructuredDescription:
        try:
            return self.table[image_key]
        except KeyError:
            raise ParseError(f"no description available for {image_key!r}")
