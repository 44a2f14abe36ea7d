"""Scenario files: declarative fixtures plus a scripted step sequence.

A scenario is one JSON object with stable key ordering:

    {
      "name": ..., "seed": ...,
      "apps": [...], "media": [...], "playback": [...],
      "registry": [...], "planner": {"answers": {...}, "done_text": ...},
      "schedules": [{"fire_at": ms, "repeat_every": ms?, "payload": {...}}],
      "script": [
        {"trigger": {"source": ..., "session": ..., "text"|"segments": ...,
                     "frames": [...], "at": ms}},
        {"gesture": {"kind": "tap", "node"|"point": ...}},
        {"advance_clock": ms},
        {"expect": {"probe": ..., ...}}
      ]
    }

Trigger steps may carry a camera/screen frame attachment modeling the
visual stream that accompanied the utterance; the envelope payload itself
stays text or speech segments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import errors
from ..device import Back, MultiTap, Scroll, Tap, TypeText
from ..device.types import SceneDescriptor
from ..events import SpeechSegment, TriggerEvent
from .modelclient import ModelEndpointConfig
from .session import Host

PROBES = ("foreground_activity", "artifact_count", "artifact_field",
          "memory_entry_count", "replay_tier", "queue_length")

STEP_KINDS = ("trigger", "gesture", "advance_clock", "expect")

DEFAULT_SESSION = "s1"


@dataclass
class ExpectResult:
    step_index: int
    probe: str
    want: object
    got: object
    ok: bool

    def to_dict(self) -> dict:
        return {"step_index": self.step_index, "probe": self.probe,
                "want": self.want, "got": self.got, "ok": self.ok}


@dataclass
class ScenarioReport:
    name: str
    steps_executed: int = 0
    expectations: list[ExpectResult] = field(default_factory=list)
    artifacts_written: list[str] = field(default_factory=list)
    responses: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.expectations)

    @property
    def failures(self) -> list[ExpectResult]:
        return [e for e in self.expectations if not e.ok]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "steps_executed": self.steps_executed,
            "passed": self.passed,
            "expectations": [e.to_dict() for e in self.expectations],
            "artifacts_written": list(self.artifacts_written),
            "responses": list(self.responses),
        }


@dataclass
class ScenarioRunResult:
    report: ScenarioReport
    host: Host


def load_scenario(path: Path | str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise errors.ParseError(f"{path}: {exc}") from exc
    validate_scenario(data)
    return data


def validate_scenario(data: dict) -> None:
    if not isinstance(data, dict) or "name" not in data:
        raise errors.ParseError("scenario must be an object with a name")
    for i, step in enumerate(data.get("script", ())):
        kinds = [k for k in STEP_KINDS if k in step]
        if len(kinds) != 1:
            raise errors.ParseError(
                f"script step {i} must hold exactly one of {STEP_KINDS}")
        if kinds[0] == "expect":
            probe = step["expect"].get("probe")
            if probe not in PROBES:
                raise errors.ParseError(
                    f"script step {i}: unknown probe {probe!r}")


def _gesture_from_step(host: Host, spec: dict):
    kind = spec["kind"]
    if kind in ("tap", "multi_tap"):
        page = host.device.current_page()

        def point_of(entry):
            if isinstance(entry, str):
                node = page.ui_root.find(entry) if page else None
                if node is None:
                    raise errors.ParseError(f"gesture names unknown node {entry!r}")
                return node.bounds.center
            x, y = entry
            return (float(x), float(y))

        if kind == "tap":
            return Tap(point_of(spec.get("node", spec.get("point"))))
        targets = spec.get("nodes", spec.get("points", ()))
        return MultiTap(tuple(point_of(t) for t in targets))
    if kind == "scroll":
        return Scroll(spec.get("direction", "down"), int(spec.get("rows", 1)))
    if kind == "type_text":
        return TypeText(spec["node"], spec.get("text", ""))
    if kind == "back":
        return Back()
    raise errors.ParseError(f"unknown gesture kind {kind!r}")


def _run_trigger(host: Host, spec: dict) -> None:
    session_id = spec.get("session", DEFAULT_SESSION)
    session = host.session(session_id)
    segments = spec.get("segments")
    if segments:
        payload = tuple(SpeechSegment.from_dict(s) for s in segments)
        default_at = min(s.t_start for s in payload)
    else:
        payload = spec.get("text", "")
        default_at = host.device.clock
    at = int(spec.get("at", default_at))

    for frame_spec in spec.get("frames", ()):
        source = frame_spec.get("source", "camera")
        ts = int(frame_spec.get("timestamp", at))
        if source == "camera":
            scene = SceneDescriptor(
                objects=tuple(frame_spec.get("objects", ())),
                scene=frame_spec.get("scene", ""),
                event=frame_spec.get("event", ""),
            )
        else:
            scene = host.device.snapshot().screenshot_id
        session.push_frame(source, scene, ts)

    host.submit(TriggerEvent(source=spec.get("source", "ui"), timestamp=at,
                             payload=payload, session_id=session_id))


def _eval_probe(host: Host, spec: dict):
    probe = spec["probe"]
    session = host.session(spec.get("session", DEFAULT_SESSION))
    if probe == "foreground_activity":
        fg = host.device.foreground
        return fg[1] if fg else ""
    if probe == "artifact_count":
        artifact = session.last_artifact
        return len(artifact.records) if artifact else 0
    if probe == "artifact_field":
        artifact = session.last_artifact
        if artifact is None:
            return None
        index = int(spec.get("index", 0))
        if index >= len(artifact.records):
            return None
        return artifact.records[index].get(spec.get("field", ""))
    if probe == "memory_entry_count":
        return len(host.store.gallery.load_file().entries)
    if probe == "replay_tier":
        return session.last_replay.tier_used if session.last_replay else ""
    if probe == "queue_length":
        return len(host.ingress)
    raise errors.ParseError(f"unknown probe {probe!r}")


def run_scenario(path_or_data, data_dir: Path | str,
                 config: Optional[ModelEndpointConfig] = None,
                 client=None) -> ScenarioRunResult:
    """Build the device from fixtures, execute the script in order, evaluate
    every expectation. Expectation failures are reported, never raised."""
    if isinstance(path_or_data, (str, Path)):
        data = load_scenario(path_or_data)
    else:
        data = path_or_data
        validate_scenario(data)

    host = Host(data, data_dir, config=config, client=client)
    report = ScenarioReport(name=data.get("name", "scenario"))

    for i, step in enumerate(data.get("script", ())):
        if "trigger" in step:
            _run_trigger(host, step["trigger"])
        elif "gesture" in step:
            host.device.apply_gesture(_gesture_from_step(host, step["gesture"]))
        elif "advance_clock" in step:
            host.advance_clock(int(step["advance_clock"]))
        elif "expect" in step:
            spec = step["expect"]
            got = _eval_probe(host, spec)
            if "equals" in spec:
                want = spec["equals"]
                ok = got == want
            elif "contains" in spec:
                want = spec["contains"]
                ok = str(want) in str(got)
            else:
                want = None
                ok = False
            report.expectations.append(ExpectResult(
                step_index=i, probe=spec["probe"], want=want, got=got, ok=ok))
        report.steps_executed += 1

    report.artifacts_written = list(host.artifacts_written)
    for session in host.sessions.values():
        report.responses.extend(t.to_dict() for t in session.turns)
    return ScenarioRunResult(report=report, host=host)
