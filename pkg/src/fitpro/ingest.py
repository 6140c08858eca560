"""Dataset manifests.

JSON-lines, one gallery entry per line.  Cropped mode entries are whole
person crops; scene mode entries are full images and must carry a pixel bbox.
Identity labels are ground truth for evaluation only and are kept out of the
index by construction (see index.build_index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FormatError, ValidationError
from .fcd import SLOTS

MODES = ("cropped", "scene")


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    identity_label: str
    descriptions: tuple = ()
    attributes: dict = field(default_factory=dict)  # slot -> tuple of tokens
    bbox: tuple | None = None  # (x, y, w, h) pixels

    def __post_init__(self):
        if not self.image_path:
            raise ValidationError("entry missing image_path")
        for slot in self.attributes:
            if slot not in SLOTS:
                raise ValidationError(f"unknown attribute slot {slot!r}")
        if self.bbox is not None and len(self.bbox) != 4:
            raise ValidationError("bbox must be [x, y, w, h]")


@dataclass(frozen=True)
class DatasetManifest:
    mode: str
    entries: tuple

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.mode == "scene":
            for e in self.entries:
                if e.bbox is None:
                    raise ValidationError(
                        f"scene entry {e.image_path!r} missing bbox"
                    )


def _entry_from_json(obj: dict) -> ManifestEntry:
    attributes = {
        slot: tuple(obj.get("attributes", {}).get(slot, []))
        for slot in SLOTS
        if obj.get("attributes", {}).get(slot)
    }
    bbox = obj.get("bbox")
    return ManifestEntry(
        image_path=obj["image_path"],
        identity_label=obj.get("identity_label", ""),
        descriptions=tuple(obj.get("descriptions", [])),
        attributes=attributes,
        bbox=tuple(bbox) if bbox is not None else None,
    )


def _entry_to_json(entry: ManifestEntry) -> dict:
    obj = {
        "image_path": entry.image_path,
        "identity_label": entry.identity_label,
        "descriptions": list(entry.descriptions),
        "attributes": {s: list(v) for s, v in sorted(entry.attributes.items())},
    }
    if entry.bbox is not None:
        obj["bbox"] = list(entry.bbox)
    return obj


def load_manifest(path, mode: str = "cropped") -> DatasetManifest:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                entry = _entry_from_json(obj)
                if mode == "scene" and entry.bbox is None:
                    raise ValidationError("scene entry missing bbox")
            except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from exc
            entries.append(entry)
    return DatasetManifest(mode=mode, entries=tuple(entries))


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in manifest.entries:
            fh.write(json.dumps(_entry_to_json(entry)) + "\n")


def eval_labels(manifest: DatasetManifest) -> dict:
    """image_key -> ground-truth label; for the metrics side only."""
    from .index import entry_image_key

    return {entry_image_key(e): e.identity_label for e in manifest.entries}
