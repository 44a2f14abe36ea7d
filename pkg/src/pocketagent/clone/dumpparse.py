"""Task-dump parsing and two-stage launch-descriptor introspection.

Stage 1 filters dump lines by app-id keyword and parses only the matched
task block's top activity. Stage 2 falls back to a full parse of the whole
dump. Both stages yield identical descriptors on well-formed input; stage
2 additionally recovers from corrupted TASK headers because ACTIVITY lines
carry the app id themselves.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .. import errors
from ..device import IntentMsg, SimDevice

log = logging.getLogger(__name__)

CAPTURE_KEYWORD_FILTER = "keyword_filter"
CAPTURE_FULL_PARSE = "full_parse"

_TASK_RE = re.compile(r"^TASK (\S+) id=(\d+)\s*$")
_ACTIVITY_RE = re.compile(r"^\s*ACTIVITY (\S+)/(\S+)\s*$")
_INTENT_RE = re.compile(
    r"^\s*intent=\{act=(\S+) dat=(\S+) cmp=(\S+) extras=\{(.*)\}\}\s*$")


@dataclass(frozen=True)
class LaunchDescriptor:
    """Replayable entry point captured from the dump; component always set."""

    action: str
    component: tuple[str, str]
    data_uri: Optional[str] = None
    extras: tuple[tuple[str, str], ...] = ()
    capture_method: str = CAPTURE_FULL_PARSE

    def extras_map(self) -> dict:
        return dict(self.extras)

    def to_intent(self) -> IntentMsg:
        return IntentMsg(action=self.action, data_uri=self.data_uri,
                         component=self.component, extras=self.extras)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "component": list(self.component),
            "data_uri": self.data_uri,
            "extras": dict(self.extras),
            "capture_method": self.capture_method,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LaunchDescriptor":
        return cls(
            action=d["action"],
            component=tuple(d["component"]),
            data_uri=d.get("data_uri"),
            extras=tuple(sorted((d.get("extras") or {}).items())),
            capture_method=d.get("capture_method", CAPTURE_FULL_PARSE),
        )


def _parse_extras(blob: str, warnings: Optional[list] = None) -> dict:
    extras: dict[str, str] = {}
    if not blob:
        return extras
    for pair in blob.split(","):
        if "=" not in pair:
            if warnings is not None:
                warnings.append(f"bad extras pair: {pair!r}")
            continue
        key, value = pair.split("=", 1)
        extras[key] = value
    return extras


def parse_intent_line(line: str, warnings: Optional[list] = None) -> Optional[IntentMsg]:
    m = _INTENT_RE.match(line)
    if m is None:
        return None
    action, dat, cmp_, extras_blob = m.groups()
    component = None
    if cmp_ != "-":
        if "/" not in cmp_:
            if warnings is not None:
                warnings.append(f"bad cmp: {cmp_!r}")
            return None
        component = tuple(cmp_.split("/", 1))
    return IntentMsg.make(
        action=action,
        data_uri=None if dat == "-" else dat,
        component=component,
        extras=_parse_extras(extras_blob, warnings),
    )


def parse_dump(text: str,
               warnings: Optional[list] = None) -> list[tuple[str, str, IntentMsg]]:
    """Total parser over the dump grammar.

    Returns (app_id, activity, intent) per stack entry, tasks in dump order,
    activities bottom-to-top. Unparseable lines are skipped with a recorded
    warning; arbitrary byte noise never raises.
    """
    records: list[tuple[str, str, IntentMsg]] = []
    pending: Optional[tuple[str, str]] = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if _TASK_RE.match(line):
            pending = None
            continue
        m = _ACTIVITY_RE.match(line)
        if m:
            pending = (m.group(1), m.group(2))
            continue
        intent = parse_intent_line(line, warnings)
        if intent is not None:
            if pending is None:
                if warnings is not None:
                    warnings.append(f"intent line without activity: {line!r}")
                continue
            records.append((pending[0], pending[1], intent))
            pending = None
            continue
        if warnings is not None:
            warnings.append(f"unparseable line: {line!r}")
        log.debug("skipping unparseable dump line: %r", line)
    return records


DumpSource = Union[str, Callable[[], str], SimDevice]


def _dump_text(source: DumpSource) -> str:
    if isinstance(source, str):
        return source
    if isinstance(source, SimDevice):
        return source.dumpsys_activity()
    return source()


def _keyword_filter_stage(text: str, app_id: str) -> Optional[LaunchDescriptor]:
    """Incremental filter: find the app's TASK block, parse only its top entry."""
    lines = text.splitlines()
    block: Optional[list[str]] = None
    for line in lines:
        if line.startswith("TASK "):
            if block is not None:
                break  # next task starts; the block is complete
            if app_id in line:
                block = []
            continue
        if block is not None:
            block.append(line)
    if not block:
        return None
    top_activity: Optional[tuple[str, str]] = None
    top_intent_line: Optional[str] = None
    for i, line in enumerate(block):
        m = _ACTIVITY_RE.match(line)
        if m:
            top_activity = (m.group(1), m.group(2))
            top_intent_line = block[i + 1] if i + 1 < len(block) else None
    if top_activity is None or top_intent_line is None:
        return None
    intent = parse_intent_line(top_intent_line)
    if intent is None or intent.component is None:
        return None
    if intent.component[0] != app_id:
        return None  # keyword hit on a substring of another app's task
    return LaunchDescriptor(
        action=intent.action,
        component=intent.component,
        data_uri=intent.data_uri,
        extras=intent.extras,
        capture_method=CAPTURE_KEYWORD_FILTER,
    )


def introspect_entry(app_id: str, dump_source: DumpSource) -> LaunchDescriptor:
    """Capture the app's top activity launch descriptor from the dump.

    Keyword filtering first; full parsing as the fallback; AppNotRunning
    when the app appears in neither.
    """
    text = _dump_text(dump_source)
    descriptor = _keyword_filter_stage(text, app_id)
    if descriptor is not None:
        return descriptor
    records = [r for r in parse_dump(text)
               if r[0] == app_id and r[2].component is not None]
    if not records:
        raise errors.AppNotRunning(app_id)
    _, _, intent = records[-1]  # bottom-to-top order: last record is the top
    return LaunchDescriptor(
        action=intent.action,
        component=intent.component,
        data_uri=intent.data_uri,
        extras=intent.extras,
        capture_method=CAPTURE_FULL_PARSE,
    )
