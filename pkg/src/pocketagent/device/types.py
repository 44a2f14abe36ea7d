"""Domain types for the simulated device: apps, UI trees, intents, media."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from ..geometry import Rect, SCREEN
from ..events import TriggerEvent

ROLES = ("button", "text", "input", "list", "image", "container")

ORIGIN_STRUCTURAL = "structural"
ORIGIN_OVERLAY = "overlay_only"


@dataclass(frozen=True)
class UiNode:
    """One node of the structural UI tree (the atree/XML signal)."""

    node_id: str
    role: str
    bounds: Rect
    text: str = ""
    content_desc: str = ""
    resource_id: str = ""
    clickable: bool = False
    scrollable: bool = False
    children: tuple["UiNode", ...] = ()

    def iter_nodes(self) -> Iterator["UiNode"]:
        """Preorder walk over this node and all descendants."""
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    def find(self, node_id: str) -> Optional["UiNode"]:
        for node in self.iter_nodes():
            if node.node_id == node_id:
                return node
        return None

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "role": self.role,
            "bounds": self.bounds.to_list(),
            "text": self.text,
            "content_desc": self.content_desc,
            "resource_id": self.resource_id,
            "clickable": self.clickable,
            "scrollable": self.scrollable,
            "children": [c.to_dict() for c in self.children],
        }


@dataclass(frozen=True)
class RenderText:
    """One visually rendered text with its box.

    origin=structural texts mirror a tree node; origin=overlay_only texts
    exist only in the render layer (ads, floating banners) and have no
    backing node.
    """

    text: str
    bbox: Rect
    origin: str = ORIGIN_STRUCTURAL
    backing_node: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "bbox": self.bbox.to_list(),
            "origin": self.origin,
            "backing_node": self.backing_node,
        }


@dataclass(frozen=True)
class ItemRecord:
    """One row of a list page: a title plus named fields."""

    title: str
    fields: tuple[tuple[str, str], ...] = ()

    def field_map(self) -> dict:
        return dict(self.fields)


@dataclass(frozen=True)
class SceneDescriptor:
    """Ground-truth scene tags. Visible only to model stubs, never the agent."""

    objects: tuple[str, ...] = ()
    scene: str = ""
    event: str = ""

    def to_dict(self) -> dict:
        return {"objects": list(self.objects), "scene": self.scene, "event": self.event}


@dataclass(frozen=True)
class Page:
    """A fully built screen: tree, render layer, and list content."""

    activity: str
    params: tuple[tuple[str, str], ...]
    ui_root: UiNode
    render_layer: tuple[RenderText, ...]
    scroll_offset: int = 0
    items: Optional[tuple[ItemRecord, ...]] = None
    visible_items: tuple[int, int] = (0, 0)  # [start, end) slice of items on screen
    scene: Optional[SceneDescriptor] = None
    truth_boxes: tuple[tuple[str, Rect], ...] = ()

    def param_map(self) -> dict:
        return dict(self.params)

    def visible_texts(self) -> list[str]:
        return [n.text for n in self.ui_root.iter_nodes() if n.text]

    def has_scrollable_list(self) -> bool:
        return any(n.scrollable for n in self.ui_root.iter_nodes())


@dataclass(frozen=True)
class Observation:
    """The agent's sole view of the device; a pure snapshot of the foreground."""

    activity: str
    params: tuple[tuple[str, str], ...]
    ui_root: UiNode
    render_layer: tuple[RenderText, ...]
    scroll_offset: int
    timestamp: int
    screenshot_id: str

    def param_map(self) -> dict:
        return dict(self.params)

    def visible_texts(self) -> list[str]:
        return [n.text for n in self.ui_root.iter_nodes() if n.text]

    def to_dict(self) -> dict:
        return {
            "activity": self.activity,
            "params": dict(self.params),
            "ui_root": self.ui_root.to_dict(),
            "render_layer": [r.to_dict() for r in self.render_layer],
            "scroll_offset": self.scroll_offset,
            "timestamp": self.timestamp,
            "screenshot_id": self.screenshot_id,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class IntentMsg:
    """A launch request: action, optional data URI, optional component, extras."""

    action: str
    data_uri: Optional[str] = None
    component: Optional[tuple[str, str]] = None  # (app_id, activity)
    extras: tuple[tuple[str, str], ...] = ()

    def extras_map(self) -> dict:
        return dict(self.extras)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "data_uri": self.data_uri,
            "component": list(self.component) if self.component else None,
            "extras": dict(self.extras),
        }

    @classmethod
    def make(cls, action: str, data_uri: str | None = None,
             component: tuple[str, str] | None = None,
             extras: Mapping[str, str] | None = None) -> "IntentMsg":
        return cls(
            action=action,
            data_uri=data_uri,
            component=tuple(component) if component else None,
            extras=tuple(sorted((extras or {}).items())),
        )


@dataclass(frozen=True)
class MediaAsset:
    """A gallery photo. truth carries fixture descriptors for model stubs."""

    asset_id: int
    filename: str
    folder: str
    captured_at: int
    width: int
    height: int
    truth: SceneDescriptor = SceneDescriptor()


@dataclass(frozen=True)
class AlarmSpec:
    """A scheduled wake-up; repeat_every, when present, must be > 0."""

    alarm_id: str
    fire_at: int
    payload: TriggerEvent
    repeat_every: Optional[int] = None

    def __post_init__(self):
        if self.repeat_every is not None and self.repeat_every <= 0:
            raise ValueError("repeat_every must be > 0")


# --- gestures ---------------------------------------------------------------

@dataclass(frozen=True)
class Tap:
    point: tuple[float, float]


@dataclass(frozen=True)
class MultiTap:
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Scroll:
    direction: str  # "down" | "up"
    rows: int


@dataclass(frozen=True)
class TypeText:
    node_id: str
    text: str


@dataclass(frozen=True)
class Back:
    pass


Gesture = Tap | MultiTap | Scroll | TypeText | Back


def gesture_to_dict(g: Gesture) -> dict:
    if isinstance(g, Tap):
        return {"kind": "tap", "point": list(g.point)}
    if isinstance(g, MultiTap):
        return {"kind": "multi_tap", "points": [list(p) for p in g.points]}
    if isinstance(g, Scroll):
        return {"kind": "scroll", "direction": g.direction, "rows": g.rows}
    if isinstance(g, TypeText):
        return {"kind": "type_text", "node_id": g.node_id, "text": g.text}
    if isinstance(g, Back):
        return {"kind": "back"}
    raise TypeError(f"not a gesture: {g!r}")


def gesture_from_dict(d: Mapping) -> Gesture:
    kind = d["kind"]
    if kind == "tap":
        x, y = d["point"]
        return Tap(point=(float(x), float(y)))
    if kind == "multi_tap":
        return MultiTap(points=tuple((float(x), float(y)) for x, y in d["points"]))
    if kind == "scroll":
        return Scroll(direction=d["direction"], rows=int(d["rows"]))
    if kind == "type_text":
        return TypeText(node_id=d["node_id"], text=d["text"])
    if kind == "back":
        return Back()
    raise ValueError(f"unknown gesture kind: {kind}")


def screenshot_digest(activity: str, params: Mapping[str, str], scroll_offset: int,
                      render_layer: tuple[RenderText, ...]) -> str:
    """Content-addressed screenshot id: stable across identical page states."""
    blob = json.dumps(
        {
            "activity": activity,
            "params": dict(params),
            "scroll_offset": scroll_offset,
            "render_layer": [r.to_dict() for r in render_layer],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return "shot-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def validate_tree(root: UiNode) -> None:
    """Enforce tree invariants: unique ids, nesting, on-screen bounds."""
    seen: set[str] = set()
    for node in root.iter_nodes():
        if node.node_id in seen:
            raise ValueError(f"duplicate node_id {node.node_id!r}")
        seen.add(node.node_id)
        if node.role not in ROLES:
            raise ValueError(f"unknown role {node.role!r} on {node.node_id!r}")
        if not SCREEN.contains_rect(node.bounds):
            raise ValueError(f"node {node.node_id!r} bounds {node.bounds} off screen")
        for child in node.children:
            if not node.bounds.contains_rect(child.bounds):
                raise ValueError(
                    f"child {child.node_id!r} escapes parent {node.node_id!r}"
                )
