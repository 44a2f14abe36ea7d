"""Hybrid UI grounding: structural tree first, rendered text second, visual
grounding third.

Structured interface evidence is used while it is reliable; each later
stage only runs when the previous one produced nothing above the score
threshold. Token-subset matching scores a candidate by the fraction of
target tokens it carries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from . import errors
from .device import Observation, SimDevice
from .device.types import UiNode
from .geometry import Rect, SCREEN
from .textutil import tokenize

SOURCE_XML = "xml"
SOURCE_OCR = "ocr"
SOURCE_VISUAL = "visual"

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TargetSpec:
    query: str
    role_hint: Optional[str] = None

    def __post_init__(self):
        if not self.query:
            raise ValueError("query must be non-empty")


@dataclass(frozen=True)
class GroundingResult:
    point: tuple[float, float]
    bbox: Rect
    source: str
    score: float
    matched_node: Optional[str] = None


class VisualGrounder(Protocol):
    def ground(self, screenshot_id: str, query: str) -> Optional[Rect]: ...


class FixtureVisualGrounder:
    """Stub grounding model: answers from the page's fixture truth boxes."""

    def __init__(self, device: SimDevice):
        self._device = device

    def ground(self, screenshot_id: str, query: str) -> Optional[Rect]:
        shot = self._device.shot(screenshot_id)
        if shot is None:
            return None
        want = tokenize(query)
        for truth_query, bbox in shot.page.truth_boxes:
            if tokenize(truth_query) == want:
                return bbox
        return None


class NullVisualGrounder:
    def ground(self, screenshot_id: str, query: str) -> Optional[Rect]:
        return None


def _match_fraction(target_tokens: list[str], haystack: set[str]) -> float:
    if not target_tokens:
        return 0.0
    hit = sum(1 for t in target_tokens if t in haystack)
    return hit / len(target_tokens)


def _result(bbox: Rect, source: str, score: float,
            matched_node: Optional[str]) -> GroundingResult:
    return GroundingResult(point=bbox.center, bbox=bbox, source=source,
                           score=score, matched_node=matched_node)


def _pick(candidates: list[tuple[float, Rect, Optional[str]]]):
    """Best score first; ties by smallest area, then topmost, then leftmost."""
    return min(
        candidates,
        key=lambda c: (-c[0], c[1].area, c[1].top, c[1].left),
    )


def hybrid_ground(obs: Observation, target: TargetSpec, model: VisualGrounder,
                  threshold: float = DEFAULT_THRESHOLD) -> GroundingResult:
    """Resolve a target description to an on-screen point.

    Stage 1 (xml): tree nodes whose text/content_desc/resource_id tokens
    cover target tokens, clickable themselves or via an ancestor, with
    non-degenerate bounds. Stage 2 (ocr): render-layer texts, including
    overlay-only ones. Stage 3 (visual): the grounding model's box. The
    first stage holding a candidate at or above the threshold wins.
    """
    target_tokens = tokenize(target.query)
    if not target_tokens:
        raise errors.NoTarget(target.query)

    xml_candidates: list[tuple[float, Rect, Optional[str]]] = []

    def walk(node: UiNode, ancestor_clickable: bool):
        clickable_here = ancestor_clickable or node.clickable
        if not node.bounds.is_degenerate() and clickable_here:
            haystack = set(tokenize(node.text)) | set(tokenize(node.content_desc)) \
                | set(tokenize(node.resource_id))
            if target.role_hint is None or node.role == target.role_hint:
                score = _match_fraction(target_tokens, haystack)
                if score > 0:
                    xml_candidates.append((score, node.bounds, node.node_id))
        for child in node.children:
            walk(child, clickable_here)

    walk(obs.ui_root, False)
    strong = [c for c in xml_candidates if c[0] >= threshold]
    if strong:
        score, bbox, node_id = _pick(strong)
        return _result(bbox, SOURCE_XML, score, node_id)

    ocr_candidates: list[tuple[float, Rect, Optional[str]]] = []
    for render in obs.render_layer:
        if render.bbox.is_degenerate():
            continue
        score = _match_fraction(target_tokens, set(tokenize(render.text)))
        if score >= threshold:
            ocr_candidates.append((score, render.bbox, render.backing_node))
    if ocr_candidates:
        score, bbox, node_id = _pick(ocr_candidates)
        return _result(bbox, SOURCE_OCR, score, node_id)

    bbox = model.ground(obs.screenshot_id, target.query)
    if bbox is not None and not bbox.is_degenerate() and SCREEN.contains_rect(bbox):
        return _result(bbox, SOURCE_VISUAL, 1.0, None)

    raise errors.NoTarget(target.query)
