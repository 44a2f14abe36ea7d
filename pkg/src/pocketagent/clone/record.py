"""Behavior-clone recording: trace UI-layer navigation between start/stop."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Union

from .. import errors
from ..device import IntentMsg, SimDevice
from ..device.types import Gesture, Page, gesture_to_dict

SIGNATURE_TOP_TEXTS = 8


@dataclass(frozen=True)
class PageSignature:
    """Lightweight page summary: activity plus up to 8 visible texts."""

    activity: str
    top_texts: tuple[str, ...]
    digest: str

    @classmethod
    def capture(cls, activity: str, texts: list[str]) -> "PageSignature":
        top = tuple(texts[:SIGNATURE_TOP_TEXTS])
        blob = activity + "\x00" + "\x00".join(top)
        return cls(activity=activity, top_texts=top,
                   digest=hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16])

    @classmethod
    def of_page(cls, page: Optional[Page]) -> "PageSignature":
        if page is None:
            return cls.capture("", [])
        return cls.capture(page.activity, page.visible_texts())

    def to_dict(self) -> dict:
        return {"activity": self.activity, "top_texts": list(self.top_texts),
                "digest": self.digest}

    @classmethod
    def from_dict(cls, d: dict) -> "PageSignature":
        return cls(activity=d["activity"], top_texts=tuple(d["top_texts"]),
                   digest=d["digest"])


Action = Union[Gesture, IntentMsg]


@dataclass(frozen=True)
class TraceStep:
    timestamp: int
    pre_signature: PageSignature
    action: Action
    post_activity: str

    def to_dict(self) -> dict:
        if isinstance(self.action, IntentMsg):
            action = {"kind": "intent", **self.action.to_dict()}
        else:
            action = gesture_to_dict(self.action)
        return {
            "timestamp": self.timestamp,
            "pre_signature": self.pre_signature.to_dict(),
            "action": action,
            "post_activity": self.post_activity,
        }


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[TraceStep, ...]
    final: tuple[str, str, tuple[tuple[str, str], ...]]  # app, activity, params

    @property
    def final_activity(self) -> str:
        return self.final[1]

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "final": {"app_id": self.final[0], "activity": self.final[1],
                      "params": dict(self.final[2])},
        }


class Recorder:
    """Brackets live gestures and launches into a trajectory.

    One recording at a time per device; replaying while recording is the
    caller's responsibility to avoid.
    """

    def __init__(self, device: SimDevice):
        self._device = device
        self._active: Optional[str] = None
        self._steps: list[TraceStep] = []

    @property
    def recording(self) -> bool:
        return self._active is not None

    def start(self, session_id: str) -> None:
        if self._active is not None:
            raise errors.AlreadyRecording(self._active)
        self._active = session_id
        self._steps = []
        self._device.add_listener(self._on_event)

    def _on_event(self, event: dict) -> None:
        kind = event.get("kind")
        if kind == "gesture":
            action: Action = event["gesture"]
        elif kind == "launch":
            action = event["intent"]
        else:
            return
        post = event.get("post")
        post_activity = post[1] if post else ""
        if kind == "launch":
            post_activity = event["page"].activity
        self._steps.append(TraceStep(
            timestamp=event["timestamp"],
            pre_signature=PageSignature.of_page(event.get("pre_page")),
            action=action,
            post_activity=post_activity,
        ))

    def stop(self) -> Trajectory:
        if self._active is None:
            raise errors.NotRecording("stop")
        self._device.remove_listener(self._on_event)
        self._active = None
        fg = self._device.foreground
        if fg is None:
            final = ("", "", ())
        else:
            app_id, activity, params = fg
            final = (app_id, activity, tuple(sorted(params.items())))
        return Trajectory(steps=tuple(self._steps), final=final)
