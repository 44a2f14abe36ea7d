"""Deterministic simulated Android device."""

from .deeplink import fill_pattern, match_pattern
from .sim import SimActivity, SimApp, SimDevice, format_intent
from .types import (
    AlarmSpec,
    Back,
    Gesture,
    IntentMsg,
    ItemRecord,
    MediaAsset,
    MultiTap,
    Observation,
    Page,
    RenderText,
    SceneDescriptor,
    Scroll,
    Tap,
    TypeText,
    UiNode,
    gesture_from_dict,
    gesture_to_dict,
)

__all__ = [
    "AlarmSpec",
    "Back",
    "Gesture",
    "IntentMsg",
    "ItemRecord",
    "MediaAsset",
    "MultiTap",
    "Observation",
    "Page",
    "RenderText",
    "SceneDescriptor",
    "Scroll",
    "SimActivity",
    "SimApp",
    "SimDevice",
    "Tap",
    "TypeText",
    "UiNode",
    "fill_pattern",
    "format_intent",
    "gesture_from_dict",
    "gesture_to_dict",
    "match_pattern",
]
