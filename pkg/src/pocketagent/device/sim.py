"""The simulated Android device.

Deterministic and fully virtual: apps, task stacks, intents and deeplinks,
UI trees with a render layer, a media store, a playback track, and a
virtual-clock alarm scheduler. No wall-clock reads anywhere; identical
fixture + seed + operation sequence always reproduces identical state.

All mutations are serialized through one lock (the command queue); pages
and observations are immutable values safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .. import errors
from ..events import CHANNEL_MIC, CHANNEL_PLAYBACK, SpeechSegment, TriggerEvent
from ..geometry import SCREEN
from . import pages
from .deeplink import fill_pattern, match_pattern
from .types import (
    AlarmSpec,
    Back,
    Gesture,
    IntentMsg,
    MediaAsset,
    MultiTap,
    Observation,
    Page,
    SceneDescriptor,
    Scroll,
    Tap,
    TypeText,
    screenshot_digest,
)

ACTION_NAVIGATE = "navigate"
ACTION_VIEW = "view"


@dataclass(frozen=True)
class SimActivity:
    """One screen of an app: export flag, deeplink patterns, page model."""

    name: str
    exported: bool = True
    deeplink_patterns: tuple[str, ...] = ()
    page_spec: Mapping = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SimActivity":
        return cls(
            name=d["name"],
            exported=bool(d.get("exported", True)),
            deeplink_patterns=tuple(d.get("deeplinks", ())),
            page_spec=d.get("page", {}),
        )


@dataclass(frozen=True)
class SimApp:
    app_id: str
    display_name: str
    activities: tuple[SimActivity, ...]
    home_activity: str

    def __post_init__(self):
        names = [a.name for a in self.activities]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate activity names in {self.app_id}")
        if self.home_activity not in names:
            raise ValueError(
                f"{self.app_id}: home_activity {self.home_activity!r} not declared")

    def activity(self, name: str) -> Optional[SimActivity]:
        for act in self.activities:
            if act.name == name:
                return act
        return None

    @classmethod
    def from_dict(cls, d: Mapping) -> "SimApp":
        return cls(
            app_id=d["app_id"],
            display_name=d.get("display_name", d["app_id"]),
            activities=tuple(SimActivity.from_dict(a) for a in d["activities"]),
            home_activity=d["home_activity"],
        )


@dataclass
class _StackEntry:
    activity: str
    params: dict
    scroll_offset: int
    intent: IntentMsg


@dataclass
class _Alarm:
    spec: AlarmSpec
    next_fire: int
    order: int


@dataclass(frozen=True)
class ShotRecord:
    """What the device remembers about a screenshot, for model stubs only."""

    screenshot_id: str
    app_id: str
    page: Page


class SimDevice:
    """Deterministic simulated device; see module docstring."""

    def __init__(self, apps: Iterable[SimApp], media: Iterable[MediaAsset] = (),
                 seed: int = 0):
        self._lock = threading.RLock()
        self.apps: list[SimApp] = list(apps)
        ids = [a.app_id for a in self.apps]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate app_id")
        self.seed = seed
        self.clock = 0
        self._stacks: dict[str, list[_StackEntry]] = {a.app_id: [] for a in self.apps}
        self._task_ids: dict[str, int] = {}
        self._next_task_id = 1
        self._foreground: Optional[str] = None
        self._alarms: list[_Alarm] = []
        self._alarm_order = 0
        self._media: list[MediaAsset] = []
        for asset in sorted(media, key=lambda a: a.asset_id):
            self.add_media(asset)
        self._playback: tuple[SpeechSegment, ...] = ()
        self._shots: dict[str, ShotRecord] = {}
        self._listeners: list[Callable[[dict], None]] = []

    # -- fixtures ------------------------------------------------------------

    @classmethod
    def from_fixture(cls, fixture: Mapping) -> "SimDevice":
        apps = [SimApp.from_dict(a) for a in fixture.get("apps", ())]
        media = [
            MediaAsset(
                asset_id=int(m["asset_id"]),
                filename=m["filename"],
                folder=m.get("folder", "DCIM"),
                captured_at=int(m.get("captured_at", m["asset_id"])),
                width=int(m.get("width", 1080)),
                height=int(m.get("height", 1920)),
                truth=SceneDescriptor(
                    objects=tuple(m.get("objects", ())),
                    scene=m.get("scene", ""),
                    event=m.get("event", ""),
                ),
            )
            for m in fixture.get("media", ())
        ]
        device = cls(apps, media, seed=int(fixture.get("seed", 0)))
        playback = fixture.get("playback")
        if playback:
            device.set_playback([SpeechSegment.from_dict(s) for s in playback])
        return device

    # -- introspection helpers -------------------------------------------------

    def app(self, app_id: str) -> Optional[SimApp]:
        for a in self.apps:
            if a.app_id == app_id:
                return a
        return None

    @property
    def foreground(self) -> Optional[tuple[str, str, dict]]:
        with self._lock:
            if self._foreground is None:
                return None
            entry = self._stacks[self._foreground][-1]
            return (self._foreground, entry.activity, dict(entry.params))

    def add_listener(self, cb: Callable[[dict], None]) -> None:
        self._listeners.append(cb)

    def remove_listener(self, cb: Callable[[dict], None]) -> None:
        self._listeners.remove(cb)

    def _notify(self, event: dict) -> None:
        for cb in list(self._listeners):
            cb(event)

    def _build_entry_page(self, app_id: str, entry: _StackEntry) -> tuple[Page, dict]:
        app = self.app(app_id)
        act = app.activity(entry.activity) if app else None
        if act is None:
            raise errors.UnknownComponent(f"{app_id}/{entry.activity}")
        page, effects = pages.build_page(
            act.name, act.page_spec, entry.params, entry.scroll_offset, self.seed)
        entry.scroll_offset = page.scroll_offset  # clamped to content
        return page, effects

    def current_page(self) -> Optional[Page]:
        with self._lock:
            if self._foreground is None:
                return None
            entry = self._stacks[self._foreground][-1]
            page, _ = self._build_entry_page(self._foreground, entry)
            return page

    # -- launching -------------------------------------------------------------

    def launch_intent(self, intent: IntentMsg, privileged: bool = False) -> Page:
        with self._lock:
            if not self.apps:
                raise errors.UnknownComponent("no apps installed")
            pre_page = self.current_page()
            page = self._launch(intent, privileged, notify=True, pre_page=pre_page)
            return page

    def _launch(self, intent: IntentMsg, privileged: bool, notify: bool,
                pre_page: Optional[Page] = None) -> Page:
        if intent.component is not None:
            app_id, act_name = intent.component
            app = self.app(app_id)
            if app is None:
                raise errors.UnknownComponent(app_id)
            act = app.activity(act_name)
            if act is None:
                raise errors.UnknownComponent(f"{app_id}/{act_name}")
            if not act.exported and not privileged:
                raise errors.NotExported(f"{app_id}/{act_name}")
            slots: dict = {}
            if intent.data_uri:
                for pattern in act.deeplink_patterns:
                    bound = match_pattern(pattern, intent.data_uri)
                    if bound is not None:
                        slots = bound
                        break
        else:
            if not intent.data_uri:
                raise errors.NoMatch("intent has neither component nor data uri")
            found = None
            for app in self.apps:  # install order breaks ties
                for act in app.activities:
                    for pattern in act.deeplink_patterns:
                        bound = match_pattern(pattern, intent.data_uri)
                        if bound is not None:
                            found = (app, act, bound)
                            break
                    if found:
                        break
                if found:
                    break
            if not found:
                raise errors.NoMatch(intent.data_uri)
            app, act, slots = found

        params = {**slots, **intent.extras_map()}
        resolved = IntentMsg.make(
            action=intent.action,
            data_uri=intent.data_uri,
            component=(app.app_id, act.name),
            extras=intent.extras_map(),
        )
        entry = _StackEntry(activity=act.name, params=params, scroll_offset=0,
                            intent=resolved)
        stack = self._stacks[app.app_id]
        if not stack:
            self._task_ids[app.app_id] = self._next_task_id
            self._next_task_id += 1
        stack.append(entry)
        self._foreground = app.app_id
        page, _ = self._build_entry_page(app.app_id, entry)
        if notify:
            self._notify({
                "kind": "launch",
                "app_id": app.app_id,
                "intent": resolved,
                "page": page,
                "pre_page": pre_page,
                "timestamp": self.clock,
            })
        return page

    def bring_to_front(self, app_id: str) -> Page:
        """Task-stack restore: foreground the app's last-viewed activity."""
        with self._lock:
            if app_id not in self._stacks or not self._stacks[app_id]:
                raise errors.AppNotRunning(app_id)
            self._foreground = app_id
            entry = self._stacks[app_id][-1]
            page, _ = self._build_entry_page(app_id, entry)
            return page

    # -- gestures ----------------------------------------------------------------

    def apply_gesture(self, gesture: Gesture) -> Optional[Page]:
        with self._lock:
            if self._foreground is None:
                raise errors.NoForeground(repr(gesture))
            pre_page = self.current_page()
            if isinstance(gesture, Tap):
                self._check_point(gesture.point)
                self._tap_once(gesture.point)
            elif isinstance(gesture, MultiTap):
                for point in gesture.points:
                    self._check_point(point)
                for point in gesture.points:  # applied in order, one transition
                    self._tap_once(point)
            elif isinstance(gesture, Scroll):
                self._scroll(gesture)
            elif isinstance(gesture, TypeText):
                self._type_text(gesture)
            elif isinstance(gesture, Back):
                self._back()
            else:
                raise TypeError(f"not a gesture: {gesture!r}")
            post_page = self.current_page()
            self._notify({
                "kind": "gesture",
                "gesture": gesture,
                "pre_page": pre_page,
                "post": self.foreground,
                "timestamp": self.clock,
            })
            return post_page

    def _check_point(self, point) -> None:
        x, y = point
        if not SCREEN.contains_point(x, y):
            raise errors.OutOfBounds(f"({x}, {y})")

    def _tap_once(self, point) -> None:
        if self._foreground is None:
            return
        app_id = self._foreground
        entry = self._stacks[app_id][-1]
        page, effects = self._build_entry_page(app_id, entry)
        x, y = point
        best = None
        best_depth = -1
        for node, depth in _iter_with_depth(page.ui_root):
            if not node.clickable or not node.bounds.contains_point(x, y):
                continue
            eff = effects.get(node.node_id)
            if eff is None or eff["effect"].get("type") == "input":
                continue
            if depth >= best_depth:
                best, best_depth = eff, depth
        if best is not None:
            self._apply_effect(app_id, entry, best["effect"], best["values"])

    def _apply_effect(self, app_id: str, entry: _StackEntry, effect: Mapping,
                      values: Mapping[str, str]) -> None:
        kind = effect.get("type")
        if kind == "navigate":
            target_app = effect.get("app", app_id)
            raw = effect.get("params", {})
            if effect.get("literal"):
                params = {str(k): str(v) for k, v in raw.items()}
            else:
                params = {str(k): pages.fill_template(str(v), values)
                          for k, v in raw.items()}
            intent = IntentMsg.make(
                action=ACTION_NAVIGATE,
                component=(target_app, effect["activity"]),
                extras=params,
            )
            self._launch(intent, privileged=True, notify=False)
        elif kind == "navigate_uri":
            uri = pages.fill_template(str(effect["uri"]), values)
            intent = IntentMsg.make(action=ACTION_VIEW, data_uri=uri)
            self._launch(intent, privileged=True, notify=False)
        elif kind == "set_param":
            entry.params[effect["key"]] = pages.fill_template(
                str(effect.get("value", "")), values)
        elif kind == "toggle_param_list":
            value = pages.fill_template(str(effect.get("value", "")), values)
            current = [v for v in entry.params.get(effect["key"], "").split(",") if v]
            if value in current:
                current.remove(value)
            else:
                current.append(value)
            entry.params[effect["key"]] = ",".join(current)
        elif kind == "back":
            self._back()
        else:
            raise ValueError(f"unknown effect type: {kind!r}")

    def _scroll(self, gesture: Scroll) -> None:
        entry = self._stacks[self._foreground][-1]
        delta = gesture.rows if gesture.direction == "down" else -gesture.rows
        entry.scroll_offset = max(0, entry.scroll_offset + delta)
        # rebuilding clamps the offset to the page's actual content
        self._build_entry_page(self._foreground, entry)

    def _type_text(self, gesture: TypeText) -> None:
        entry = self._stacks[self._foreground][-1]
        _, effects = self._build_entry_page(self._foreground, entry)
        eff = effects.get(gesture.node_id)
        if eff and eff["effect"].get("type") == "input":
            entry.params[eff["effect"]["param"]] = gesture.text

    def _back(self) -> None:
        if self._foreground is None:
            return
        stack = self._stacks[self._foreground]
        stack.pop()
        if not stack:
            self._foreground = None

    # -- observation ------------------------------------------------------------

    def snapshot(self) -> Observation:
        with self._lock:
            if self._foreground is None:
                raise errors.NoForeground("snapshot")
            entry = self._stacks[self._foreground][-1]
            page, _ = self._build_entry_page(self._foreground, entry)
            shot_id = screenshot_digest(
                page.activity, page.param_map(), page.scroll_offset, page.render_layer)
            self._shots[shot_id] = ShotRecord(
                screenshot_id=shot_id, app_id=self._foreground, page=page)
            return Observation(
                activity=page.activity,
                params=page.params,
                ui_root=page.ui_root,
                render_layer=page.render_layer,
                scroll_offset=page.scroll_offset,
                timestamp=self.clock,
                screenshot_id=shot_id,
            )

    def shot(self, screenshot_id: str) -> Optional[ShotRecord]:
        """Fixture ground truth behind a screenshot id; for model stubs only."""
        return self._shots.get(screenshot_id)

    # -- dump ------------------------------------------------------------------

    def dumpsys_activity(self) -> str:
        """Emit the task dump.

        Grammar (bit-exact; indent unit is two spaces):
          TASK <app_id> id=<n>
            ACTIVITY <app_id>/<activity_name>
              intent={act=<action> dat=<uri|-> cmp=<app_id>/<activity|-> extras={k=v,...}}

        One TASK block per non-empty stack in install order, activities
        bottom-to-top. Values must not contain '}', ',' between pairs is the
        only separator, so extras values stay comma- and brace-free.
        """
        with self._lock:
            lines: list[str] = []
            for app in self.apps:
                stack = self._stacks[app.app_id]
                if not stack:
                    continue
                lines.append(f"TASK {app.app_id} id={self._task_ids[app.app_id]}")
                for entry in stack:
                    lines.append(f"  ACTIVITY {app.app_id}/{entry.activity}")
                    lines.append(f"    intent={{{format_intent(entry.intent)}}}")
            return "\n".join(lines) + ("\n" if lines else "")

    def launched_intents(self) -> list[tuple[str, str, IntentMsg]]:
        """Stack-resident launch log, bottom-to-top per app in install order."""
        with self._lock:
            out = []
            for app in self.apps:
                for entry in self._stacks[app.app_id]:
                    out.append((app.app_id, entry.activity, entry.intent))
            return out

    # -- clock and alarms --------------------------------------------------------

    def set_alarm(self, spec: AlarmSpec) -> None:
        with self._lock:
            self._alarms.append(_Alarm(spec=spec, next_fire=spec.fire_at,
                                       order=self._alarm_order))
            self._alarm_order += 1

    def cancel_alarm(self, alarm_id: str) -> None:
        with self._lock:
            self._alarms = [a for a in self._alarms if a.spec.alarm_id != alarm_id]

    def advance_clock(self, dt: int) -> list[TriggerEvent]:
        """Advance the virtual clock, firing every alarm due in the window."""
        if dt < 0:
            raise ValueError("dt must be >= 0")
        with self._lock:
            self.clock += dt
            fired: list[tuple[int, int, TriggerEvent]] = []
            still_armed: list[_Alarm] = []
            for alarm in self._alarms:
                while alarm.next_fire <= self.clock:
                    fired.append((alarm.next_fire, alarm.order,
                                  alarm.spec.payload.at_time(alarm.next_fire)))
                    if alarm.spec.repeat_every is None:
                        break
                    alarm.next_fire += alarm.spec.repeat_every
                if alarm.spec.repeat_every is not None or alarm.next_fire > self.clock:
                    still_armed.append(alarm)
            self._alarms = still_armed
            fired.sort(key=lambda t: (t[0], t[1]))
            return [event for _, _, event in fired]

    # -- media and playback --------------------------------------------------------

    def add_media(self, asset: MediaAsset) -> None:
        with self._lock:
            if self._media:
                last = self._media[-1]
                if asset.asset_id <= last.asset_id:
                    raise ValueError("asset_id must be strictly increasing")
                if asset.captured_at < last.captured_at:
                    raise ValueError("captured_at must be non-decreasing with asset_id")
            if any(m.filename == asset.filename for m in self._media):
                raise ValueError(f"duplicate filename {asset.filename!r}")
            self._media.append(asset)

    def remove_media(self, filename: str) -> None:
        with self._lock:
            self._media = [m for m in self._media if m.filename != filename]

    def media_list(self, since_id: int = 0) -> list[MediaAsset]:
        with self._lock:
            return [m for m in self._media if m.asset_id > since_id]

    def media_by_filename(self, filename: str) -> Optional[MediaAsset]:
        with self._lock:
            for m in self._media:
                if m.filename == filename:
                    return m
            return None

    def set_playback(self, segments: Iterable[SpeechSegment]) -> None:
        segs = sorted(segments, key=lambda s: (s.t_start, s.t_end))
        for a, b in zip(segs, segs[1:]):
            if b.t_start < a.t_end:
                raise errors.OverlappingSegments(f"{a} overlaps {b}")
        with self._lock:
            self._playback = tuple(
                SpeechSegment(text=s.text, t_start=s.t_start, t_end=s.t_end,
                              channel=CHANNEL_PLAYBACK)
                for s in segs
            )

    @property
    def playback(self) -> tuple[SpeechSegment, ...]:
        return self._playback

    def mic_capture(self, user_segments: Iterable[SpeechSegment]) -> list[SpeechSegment]:
        """What the microphone hears: user speech plus echoes of the playback."""
        echoes = [
            SpeechSegment(text=p.text, t_start=p.t_start, t_end=p.t_end,
                          channel=CHANNEL_MIC)
            for p in self._playback
        ]
        merged = list(user_segments) + echoes
        merged.sort(key=lambda s: (s.t_start, s.t_end, s.text))
        return merged

    # -- digests -----------------------------------------------------------------

    def state_digest(self) -> str:
        """Hash of the externally visible device state, for parity checks."""
        with self._lock:
            state = {
                "clock": self.clock,
                "foreground": self._foreground,
                "stacks": {
                    app.app_id: [
                        {
                            "activity": e.activity,
                            "params": dict(sorted(e.params.items())),
                            "scroll_offset": e.scroll_offset,
                            "intent": e.intent.to_dict(),
                        }
                        for e in self._stacks[app.app_id]
                    ]
                    for app in self.apps
                },
            }
            blob = json.dumps(state, sort_keys=True, separators=(",", ":"))
            return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def format_intent(intent: IntentMsg) -> str:
    extras = ",".join(f"{k}={v}" for k, v in intent.extras)
    dat = intent.data_uri if intent.data_uri else "-"
    cmp_ = "/".join(intent.component) if intent.component else "-"
    return f"act={intent.action} dat={dat} cmp={cmp_} extras={{{extras}}}"


def _iter_with_depth(root, depth: int = 0):
    yield root, depth
    for child in root.children:
        yield from _iter_with_depth(child, depth + 1)
