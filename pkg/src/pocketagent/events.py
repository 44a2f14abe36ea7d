"""Trigger and speech-segment types shared by the device, ingress, and perception.

They live in one module because the device's alarm scheduler emits trigger
events, the ingress queue consumes them, and the playback track is made of
speech segments; none of those layers should import the others for a type.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

SOURCE_UI = "ui"
SOURCE_FLOATING_WIDGET = "floating_widget"
SOURCE_MICROPHONE = "microphone"
SOURCE_SCHEDULE = "schedule"
SOURCE_EXTERNAL_GATEWAY = "external_gateway"

TRIGGER_SOURCES = (
    SOURCE_UI,
    SOURCE_FLOATING_WIDGET,
    SOURCE_MICROPHONE,
    SOURCE_SCHEDULE,
    SOURCE_EXTERNAL_GATEWAY,
)

CHANNEL_MIC = "mic"
CHANNEL_PLAYBACK = "playback"


@dataclass(frozen=True)
class SpeechSegment:
    """A transcribed stretch of audio. t_start <= t_end, virtual ms."""

    text: str
    t_start: int
    t_end: int
    channel: str = CHANNEL_MIC

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError(f"segment ends before it starts: {self}")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "channel": self.channel,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpeechSegment":
        return cls(
            text=d["text"],
            t_start=int(d["t_start"]),
            t_end=int(d["t_end"]),
            channel=d.get("channel", CHANNEL_MIC),
        )


Payload = Union[str, tuple]


@dataclass(frozen=True)
class TriggerEvent:
    """One raw trigger from any source, prior to normalization.

    payload is one of: a text query (str), a tuple of SpeechSegment, or a raw
    gateway message (str tagged by source=external_gateway).
    """

    source: str
    timestamp: int
    payload: Payload
    session_id: str = "default"

    def __post_init__(self):
        if self.source not in TRIGGER_SOURCES:
            raise ValueError(f"unknown trigger source: {self.source}")
        if not self.session_id:
            raise ValueError("session_id must be non-empty")

    def at_time(self, timestamp: int) -> "TriggerEvent":
        return replace(self, timestamp=timestamp)
