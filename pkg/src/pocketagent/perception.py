"""Perception pipeline: frame ring, echo filtering, alignment, intent.

The stages run in order: visual frames stream into a ring buffer; the
microphone transcript is cleaned of playback echoes; the utterance is
aligned with the frames that were on screen or in view around it; deictic
queries are grounded in the aligned scene and expanded; the expanded query
is decomposed into a (target app, action type, parameter slots) triple.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Protocol, Sequence, Union

from . import errors
from .events import CHANNEL_MIC, SpeechSegment
from .device import SimDevice
from .device.types import SceneDescriptor
from .textutil import normalize_text

SOURCE_CAMERA = "camera"
SOURCE_SCREEN = "screen"

DEFAULT_RING_CAPACITY = 64
DEFAULT_AEC_WINDOW_MS = 500
DEFAULT_ALIGN_PRE_MS = 2000
DEFAULT_ALIGN_POST_MS = 500

_DEICTIC = re.compile(r"\b(this|these|it)\b", re.IGNORECASE)


@dataclass(frozen=True)
class Frame:
    """One visual observation: camera descriptor or screen screenshot id."""

    frame_id: int
    timestamp: int
    source: str
    scene: Union[SceneDescriptor, str]

    def __post_init__(self):
        if self.source == SOURCE_CAMERA and not isinstance(self.scene, SceneDescriptor):
            raise ValueError("camera frames carry scene descriptors")
        if self.source == SOURCE_SCREEN and not isinstance(self.scene, str):
            raise ValueError("screen frames carry screenshot ids")
        if self.source not in (SOURCE_CAMERA, SOURCE_SCREEN):
            raise ValueError(f"unknown frame source {self.source!r}")


class FrameRing:
    """Bounded in-memory frame history; oldest evicted first.

    Single writer, many readers: reads return immutable snapshots.
    """

    def __init__(self, capacity: int = DEFAULT_RING_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._frames: tuple[Frame, ...] = ()
        self._lock = threading.Lock()

    def push(self, frame: Frame) -> None:
        with self._lock:
            if self._frames:
                last = self._frames[-1]
                if frame.timestamp < last.timestamp:
                    raise errors.TimestampRegression(
                        f"{frame.timestamp} < {last.timestamp}")
                if frame.frame_id <= last.frame_id:
                    raise ValueError("frame_id must be strictly increasing")
            frames = self._frames + (frame,)
            if len(frames) > self.capacity:
                frames = frames[len(frames) - self.capacity:]
            self._frames = frames

    def snapshot(self) -> tuple[Frame, ...]:
        with self._lock:
            return self._frames

    def __len__(self) -> int:
        return len(self._frames)


def push_frame(frame: Frame, ring: FrameRing) -> FrameRing:
    ring.push(frame)
    return ring


# --- acoustic echo cancellation (transcript level) ---------------------------

def aec_filter(mic: Sequence[SpeechSegment], playback: Sequence[SpeechSegment],
               window: int = DEFAULT_AEC_WINDOW_MS) -> list[SpeechSegment]:
    """Drop mic segments that echo the device's own playback.

    A mic segment m is an echo of playback segment p when their normalized
    texts are equal and |m.t_start - p.t_start| <= window. Each playback
    segment cancels at most one mic segment; playback segments are processed
    in time order and each takes the earliest matching mic segment.
    """
    for seg in mic:
        if seg.channel != CHANNEL_MIC:
            raise ValueError(f"mic list contains non-mic segment: {seg}")
    cancelled: set[int] = set()
    mic_order = sorted(range(len(mic)), key=lambda i: (mic[i].t_start, i))
    for p in sorted(playback, key=lambda s: s.t_start):
        p_norm = normalize_text(p.text)
        for i in mic_order:
            if i in cancelled:
                continue
            m = mic[i]
            if abs(m.t_start - p.t_start) <= window and normalize_text(m.text) == p_norm:
                cancelled.add(i)
                break
    return [m for i, m in enumerate(mic) if i not in cancelled]


# --- temporal alignment --------------------------------------------------------

@dataclass(frozen=True)
class Utterance:
    text: str
    t0: int
    t1: int


def utterance_from_segments(segments: Iterable[SpeechSegment]) -> Utterance:
    segs = sorted(segments, key=lambda s: (s.t_start, s.t_end))
    if not segs:
        raise ValueError("no segments")
    return Utterance(
        text=" ".join(s.text for s in segs),
        t0=segs[0].t_start,
        t1=max(s.t_end for s in segs),
    )


@dataclass(frozen=True)
class AlignedUtterance:
    text: str
    window: tuple[int, int]
    frames: tuple[Frame, ...]
    representative: Frame


def align(utterance: Utterance, ring: FrameRing,
          pre: int = DEFAULT_ALIGN_PRE_MS,
          post: int = DEFAULT_ALIGN_POST_MS) -> AlignedUtterance:
    """Match the utterance with ring frames in [t0-pre, t1+post].

    Representative is the frame nearest the utterance midpoint, earlier
    frame on ties. With no frame in the window, the latest frame overall
    stands in alone.
    """
    frames = ring.snapshot()
    if not frames:
        raise errors.EmptyRing("align")
    lo, hi = utterance.t0 - pre, utterance.t1 + post
    in_window = tuple(f for f in frames if lo <= f.timestamp <= hi)
    if not in_window:
        rep = frames[-1]
        return AlignedUtterance(utterance.text, (lo, hi), (rep,), rep)
    mid = (utterance.t0 + utterance.t1) / 2
    rep = min(in_window, key=lambda f: (abs(f.timestamp - mid), f.timestamp))
    return AlignedUtterance(utterance.text, (lo, hi), in_window, rep)


# --- scene-grounded understanding ------------------------------------------------

class SceneResolver(Protocol):
    def resolve(self, frame: Frame) -> Optional[SceneDescriptor]: ...


class FixtureSceneResolver:
    """Default stub: reads fixture truth descriptors straight off the frame
    (camera) or the page behind a screenshot id (screen)."""

    def __init__(self, device: Optional[SimDevice] = None):
        self._device = device

    def resolve(self, frame: Frame) -> Optional[SceneDescriptor]:
        if frame.source == SOURCE_CAMERA:
            return frame.scene
        if self._device is None:
            return None
        shot = self._device.shot(frame.scene)
        return shot.page.scene if shot else None


@dataclass(frozen=True)
class DirectAnswer:
    answer: str


@dataclass(frozen=True)
class ExpandedQuery:
    text: str


_PRICE_PATTERNS = (
    re.compile(r"^how much (?:does|is) (.+?) (?:cost )?on (\w+)\W*$", re.IGNORECASE),
    re.compile(r"^(?:check|what is|what's) the price of (.+?) on (\w+)\W*$",
               re.IGNORECASE),
)
_PRICE_NO_APP = re.compile(
    r"^(?:check|what is|what's) the price of (.+?)\W*$", re.IGNORECASE)

_ATTRIBUTE_WORDS = {
    "object": "objects",
    "objects": "objects",
    "scene": "scene",
    "place": "scene",
    "event": "event",
}


def _collapse_repeats(text: str) -> str:
    words = text.split()
    out: list[str] = []
    for w in words:
        if out and out[-1].lower() == w.lower():
            continue
        out.append(w)
    return " ".join(out)


def _substitute_deixis(text: str, label: str) -> str:
    return _collapse_repeats(_DEICTIC.sub(label, text))


def understand(aligned: AlignedUtterance,
               resolver: SceneResolver) -> Union[DirectAnswer, ExpandedQuery]:
    """Expand the raw query against the aligned scene.

    Deictic tokens are replaced by the salient object of the representative
    frame. If the query asks for an attribute the scene already carries
    (object / scene / event), the answer comes straight back without any
    downstream action.
    """
    query = aligned.text
    descriptor = resolver.resolve(aligned.representative)
    has_deixis = _DEICTIC.search(query) is not None
    label = ""
    if descriptor is not None and descriptor.objects:
        label = descriptor.objects[0]
    if has_deixis and not label:
        raise errors.UnresolvedDeixis(query)

    if descriptor is not None:
        for word in normalize_text(query).split():
            attr = _ATTRIBUTE_WORDS.get(word)
            if attr is None:
                continue
            value = (", ".join(descriptor.objects) if attr == "objects"
                     else getattr(descriptor, attr))
            if value:
                return DirectAnswer(answer=value)

    resolved = _substitute_deixis(query, label) if has_deixis else query
    for pattern in _PRICE_PATTERNS:
        m = pattern.match(resolved)
        if m:
            return ExpandedQuery(
                f"the user wants to know the price of {m.group(1)} on {m.group(2)}")
    m = _PRICE_NO_APP.match(resolved)
    if m:
        return ExpandedQuery(f"the user wants to know the price of {m.group(1)}")
    return ExpandedQuery(resolved)


# --- triple decomposition -----------------------------------------------------------

ACTION_SEARCH = "search"
ACTION_OPEN = "open"
ACTION_EXECUTE_SKILL = "execute_skill"
ACTION_COMPOSE = "compose"
ACTION_ANSWER = "answer"


@dataclass(frozen=True)
class StructuredIntent:
    expanded_query: str
    target_app: str
    action_type: str
    slots: tuple[tuple[str, str], ...] = ()
    origin: str = "rule_stub"

    def __post_init__(self):
        if self.action_type != ACTION_ANSWER and not self.target_app:
            raise ValueError("non-answer intents need a target app")

    def slot_map(self) -> dict:
        return dict(self.slots)


@dataclass(frozen=True)
class AppAlias:
    """Registry row: how an app is referred to and what it is good for."""

    app_id: str
    aliases: tuple[str, ...] = ()
    category: str = ""
    routes: tuple[tuple[str, str], ...] = ()  # action_type -> URI template

    def route_map(self) -> dict:
        return dict(self.routes)


class AppRegistry:
    def __init__(self, entries: Iterable[AppAlias] = ()):
        self.entries = list(entries)

    @classmethod
    def from_dicts(cls, rows: Iterable[Mapping]) -> "AppRegistry":
        return cls(
            AppAlias(
                app_id=r["app_id"],
                aliases=tuple(a.lower() for a in r.get("aliases", ())),
                category=r.get("category", ""),
                routes=tuple(sorted((r.get("routes") or {}).items())),
            )
            for r in rows
        )

    def find_alias(self, text: str) -> Optional[AppAlias]:
        """First registry entry whose alias appears as a word in the text."""
        lowered = normalize_text(text)
        words = set(lowered.split())
        for entry in self.entries:
            for alias in entry.aliases + (entry.app_id.lower(),):
                if alias in words:
                    return entry
        return None

    def default_for(self, category: str) -> Optional[AppAlias]:
        for entry in self.entries:
            if entry.category == category:
                return entry
        return None

    def get(self, app_id: str) -> Optional[AppAlias]:
        for entry in self.entries:
            if entry.app_id == app_id:
                return entry
        return None


_RULE_PRICE = re.compile(r"\bprice of (.+?)(?: on (\w+))?\W*$", re.IGNORECASE)
_RULE_SEARCH = re.compile(r"\bsearch (?:for )?(.+?)(?: on (\w+))?\W*$", re.IGNORECASE)
_RULE_COMPOSE = re.compile(r"\bfind all (\w+)(?:-themed)? photos\b", re.IGNORECASE)
_RULE_SOLVE = re.compile(r"\bsolve (?:the )?(.+?) (?:problems|questions)\b",
                         re.IGNORECASE)
_RULE_OPEN = re.compile(r"\bopen (?:the )?(.+?)\W*$", re.IGNORECASE)

_VERB_CATEGORY = {
    ACTION_SEARCH: "ecommerce",
    ACTION_COMPOSE: "editor",
    ACTION_OPEN: "",
}


def _resolve_app(registry: AppRegistry, mention: str, category: str):
    entry = None
    if mention:
        entry = registry.find_alias(mention)
    if entry is None and category:
        entry = registry.default_for(category)
    return entry


def decompose(expanded_query: str, registry: AppRegistry) -> StructuredIntent:
    """Rule-table decomposition into the (app, action, slots) triple.

    Total: any string yields an intent; everything unmatched falls back to
    action_type=answer with no target app.
    """
    def intent(app, action, slots):
        return StructuredIntent(
            expanded_query=expanded_query,
            target_app=app.app_id if app else "",
            action_type=action if app or action == ACTION_ANSWER else ACTION_ANSWER,
            slots=tuple(sorted(slots.items())),
        )

    m = _RULE_PRICE.search(expanded_query)
    if m:
        app = _resolve_app(registry, m.group(2) or "", "ecommerce")
        if app:
            return intent(app, ACTION_SEARCH, {"q": m.group(1).strip()})

    m = _RULE_SEARCH.search(expanded_query)
    if m:
        app = _resolve_app(registry, m.group(2) or "", "ecommerce")
        if app:
            return intent(app, ACTION_SEARCH, {"q": m.group(1).strip()})

    m = _RULE_COMPOSE.search(expanded_query)
    if m:
        app = _resolve_app(registry, expanded_query, "editor")
        if app:
            return intent(app, ACTION_COMPOSE, {"theme": m.group(1).lower()})

    m = _RULE_SOLVE.search(expanded_query)
    if m:
        app = _resolve_app(registry, expanded_query, "education")
        if app:
            return intent(app, ACTION_OPEN, {"subject": m.group(1).strip()})

    m = _RULE_OPEN.search(expanded_query)
    if m:
        app = registry.find_alias(expanded_query)
        if app:
            return intent(app, ACTION_OPEN, {"target": m.group(1).strip()})

    return intent(None, ACTION_ANSWER, {})
