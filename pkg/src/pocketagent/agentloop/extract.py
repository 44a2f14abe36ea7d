"""The scroll-screenshot-extract procedure and its session artifacts."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from .. import errors
from ..device import Observation, Scroll, SimDevice
from ..grounding import TargetSpec, VisualGrounder, NullVisualGrounder, hybrid_ground
from ..device.types import Tap
from .loop import Decision

DOMAIN_ECOMMERCE = "ecommerce"
DOMAIN_LOCAL_SERVICE = "local_service"

_FIELDS = {
    DOMAIN_ECOMMERCE: ("title", "price", "sales"),
    DOMAIN_LOCAL_SERVICE: ("name", "rating", "distance"),
}

EMPTY_MARKER = ""

DEFAULT_PASSES = 3


@dataclass(frozen=True)
class ExtractionSchema:
    domain: str
    fields: tuple[str, ...]

    @property
    def key_field(self) -> str:
        return self.fields[0]


def schema_for(domain: str) -> ExtractionSchema:
    if domain not in _FIELDS:
        raise ValueError(f"unknown extraction domain {domain!r}")
    return ExtractionSchema(domain=domain, fields=_FIELDS[domain])


@dataclass(frozen=True)
class SessionArtifact:
    artifact_id: str
    schema: ExtractionSchema
    records: tuple[dict, ...]
    source_screenshots: tuple[str, ...]
    created_at: int

    def to_jsonl(self) -> str:
        """One metadata line, then one record per line; keys stay sorted so
        diffs are meaningful."""
        meta = {
            "artifact_id": self.artifact_id,
            "domain": self.schema.domain,
            "fields": list(self.schema.fields),
            "record_count": len(self.records),
            "source_screenshots": list(self.source_screenshots),
            "created_at": self.created_at,
        }
        lines = [json.dumps(meta, sort_keys=True)]
        lines.extend(json.dumps(r, sort_keys=True) for r in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "SessionArtifact":
        lines = [line for line in text.splitlines() if line.strip()]
        meta = json.loads(lines[0])
        return cls(
            artifact_id=meta["artifact_id"],
            schema=ExtractionSchema(domain=meta["domain"],
                                    fields=tuple(meta["fields"])),
            records=tuple(json.loads(line) for line in lines[1:]),
            source_screenshots=tuple(meta["source_screenshots"]),
            created_at=int(meta["created_at"]),
        )


class Extractor(Protocol):
    def extract(self, observation: Observation) -> list[dict]: ...


class FixtureExtractor:
    """Stub reading model: maps the viewport's fixture items to field maps."""

    def __init__(self, device: SimDevice, schema: ExtractionSchema):
        self._device = device
        self.schema = schema

    def extract(self, observation: Observation) -> list[dict]:
        shot = self._device.shot(observation.screenshot_id)
        if shot is None or shot.page.items is None:
            return []
        start, end = shot.page.visible_items
        records = []
        for item in shot.page.items[start:end]:
            fields = item.field_map()
            record = {}
            for name in self.schema.fields:
                value = fields.get(name)
                if value is None and name in ("title", "name"):
                    value = item.title
                record[name] = value if value is not None else EMPTY_MARKER
            records.append(record)
        return records


def _dedup(records: Sequence[dict], key_field: str) -> list[dict]:
    seen: set[str] = set()
    out = []
    for record in records:
        key = record.get(key_field, EMPTY_MARKER)
        if key in seen:
            continue
        seen.add(key)
        out.append(record)
    return out


def scroll_extract(device: SimDevice, schema: ExtractionSchema,
                   extractor: Extractor, passes: int = DEFAULT_PASSES,
                   artifact_id: str = "artifact-1") -> SessionArtifact:
    """Extract the current list page across `passes` screenfuls of scrolling.

    The initial viewport is always read, so passes=0 means "extract without
    scrolling". Records dedup by the schema's key field, first occurrence
    kept.
    """
    observation = device.snapshot()
    if not any(n.scrollable for n in observation.ui_root.iter_nodes()):
        raise errors.NotScrollable(observation.activity)
    records = list(extractor.extract(observation))
    shots = [observation.screenshot_id]
    shot = device.shot(observation.screenshot_id)
    start, end = shot.page.visible_items if shot else (0, 0)
    rows_per_screen = max(1, end - start)
    for _ in range(passes):
        device.apply_gesture(Scroll("down", rows_per_screen))
        observation = device.snapshot()
        records.extend(extractor.extract(observation))
        shots.append(observation.screenshot_id)
    return SessionArtifact(
        artifact_id=artifact_id,
        schema=schema,
        records=tuple(_dedup(records, schema.key_field)),
        source_screenshots=tuple(shots),
        created_at=device.clock,
    )


_NUMBER = re.compile(r"\d+(?:\.\d+)?")


def parse_price(value: str) -> Optional[tuple[float, str]]:
    """First numeric token in a price field: (numeric value, verbatim text)."""
    m = _NUMBER.search(value or "")
    if m is None:
        return None
    return float(m.group(0)), m.group(0)


def summarize(artifact: SessionArtifact) -> str:
    """Concise summary citing concrete numbers.

    Names the record count; for e-commerce artifacts with parseable prices,
    cites the exact min and max price strings. Every cited number appears
    verbatim in the artifact.
    """
    if not artifact.records:
        raise errors.EmptyArtifact(artifact.artifact_id)
    count = len(artifact.records)
    noun = "record" if count == 1 else "records"
    sentences = [f"Extracted {count} {noun}."]
    if artifact.schema.domain == DOMAIN_ECOMMERCE:
        priced = []
        for record in artifact.records:
            parsed = parse_price(record.get("price", ""))
            if parsed is not None:
                priced.append(parsed)
        if priced:
            lo = min(priced, key=lambda p: p[0])
            hi = max(priced, key=lambda p: p[0])
            if lo[1] == hi[1]:
                sentences.append(f"Price {lo[1]}.")
            else:
                sentences.append(f"Prices range from {lo[1]} to {hi[1]}.")
    return " ".join(sentences)


_ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
}
_ORDINAL_SUFFIXED = re.compile(r"\b(\d+)(?:st|nd|rd|th)\b", re.IGNORECASE)


def parse_ordinal(utterance: str) -> Optional[int]:
    lowered = utterance.lower()
    for word, rank in _ORDINAL_WORDS.items():
        if re.search(rf"\b{word}\b", lowered):
            return rank
    m = _ORDINAL_SUFFIXED.search(lowered)
    if m:
        return int(m.group(1))
    return None


def resolve_followup(utterance: str, artifact: Optional[SessionArtifact],
                     observation: Observation,
                     model: Optional[VisualGrounder] = None) -> Decision:
    """Map an ordinal follow-up onto the artifact and ground the row's title
    on the current page; no re-extraction, no re-grounding of the query."""
    if artifact is None or not artifact.records:
        raise errors.NoArtifact(utterance)
    rank = parse_ordinal(utterance)
    if rank is None:
        raise errors.OrdinalNotFound(utterance)
    if rank < 1 or rank > len(artifact.records):
        raise errors.OrdinalOutOfRange(
            f"{rank} of {len(artifact.records)} records")
    record = artifact.records[rank - 1]
    title = record.get(artifact.schema.key_field, "")
    grounded = hybrid_ground(observation, TargetSpec(title),
                             model or NullVisualGrounder())
    return Decision.act(Tap(grounded.point),
                        rationale=f"open record {rank}: {title!r}")
