"""Unified trigger gateway.

Every trigger source — UI, floating widget, microphone, schedule, external
gateway — funnels through submit() into one envelope queue. Normalization
is source-independent: identical payloads yield field-identical envelopes
apart from source and received_at.

Loopback gateway message format (the only built-in external adapter):
    FROM=<id> TEXT=<utf8 text>
"""

from __future__ import annotations

import heapq
import itertools
import threading
from dataclasses import dataclass
from typing import Optional, Union

from . import errors
from .device import SimDevice
from .device.types import AlarmSpec
from .events import (
    SOURCE_EXTERNAL_GATEWAY,
    SOURCE_SCHEDULE,
    SpeechSegment,
    TriggerEvent,
)

NormalizedPayload = Union[str, tuple]


@dataclass(frozen=True)
class RequestEnvelope:
    envelope_id: str
    source: str
    received_at: int
    normalized_payload: NormalizedPayload
    session_id: str

    def masked(self) -> dict:
        """Envelope with source/received_at/envelope_id removed, for equivalence."""
        return {
            "normalized_payload": self.normalized_payload,
            "session_id": self.session_id,
        }


def parse_gateway_message(raw: str) -> tuple[str, str]:
    """Parse `FROM=<id> TEXT=<text>`; raises MalformedGatewayMessage."""
    line = raw.strip("\n")
    if not line.startswith("FROM="):
        raise errors.MalformedGatewayMessage(raw)
    rest = line[len("FROM="):]
    if " TEXT=" not in rest:
        raise errors.MalformedGatewayMessage(raw)
    sender, text = rest.split(" TEXT=", 1)
    if not sender:
        raise errors.MalformedGatewayMessage(raw)
    return sender, text


class Ingress:
    """FIFO envelope queue over all trigger sources.

    submit() is safe from multiple threads; poll_next() is single-consumer.
    Envelopes order by (received_at, submission order).
    """

    def __init__(self, device: SimDevice):
        self._device = device
        self._lock = threading.Lock()
        self._heap: list[tuple[int, int, RequestEnvelope]] = []
        self._seq = itertools.count()
        self._env_count = itertools.count(1)
        self._alarm_count = itertools.count(1)
        self.accepted = 0
        self.polled = 0

    def _normalize(self, trigger: TriggerEvent) -> NormalizedPayload:
        payload = trigger.payload
        if trigger.source == SOURCE_EXTERNAL_GATEWAY:
            if not isinstance(payload, str):
                raise errors.MalformedGatewayMessage(repr(payload))
            _, text = parse_gateway_message(payload)
            return text
        if isinstance(payload, str):
            return payload
        if isinstance(payload, (tuple, list)) and all(
                isinstance(s, SpeechSegment) for s in payload):
            return tuple(payload)
        raise errors.MalformedGatewayMessage(repr(payload))

    def submit(self, trigger: TriggerEvent) -> RequestEnvelope:
        normalized = self._normalize(trigger)
        with self._lock:
            envelope = RequestEnvelope(
                envelope_id=f"env-{next(self._env_count):06d}",
                source=trigger.source,
                received_at=trigger.timestamp,
                normalized_payload=normalized,
                session_id=trigger.session_id,
            )
            heapq.heappush(
                self._heap, (envelope.received_at, next(self._seq), envelope))
            self.accepted += 1
            return envelope

    def poll_next(self) -> Optional[RequestEnvelope]:
        with self._lock:
            if not self._heap:
                return None
            _, _, envelope = heapq.heappop(self._heap)
            self.polled += 1
            return envelope

    def __len__(self) -> int:
        with self._lock:
            return len(self._heap)

    def register_schedule(self, fire_at: int, payload: TriggerEvent,
                          repeat_every: int | None = None) -> str:
        """Install a wake-up alarm in the device; fired alarms re-enter submit."""
        if fire_at < self._device.clock:
            raise errors.PastFireTime(f"{fire_at} < {self._device.clock}")
        alarm_id = f"alarm-{next(self._alarm_count):04d}"
        if payload.source != SOURCE_SCHEDULE:
            payload = TriggerEvent(
                source=SOURCE_SCHEDULE,
                timestamp=payload.timestamp,
                payload=payload.payload,
                session_id=payload.session_id,
            )
        self._device.set_alarm(AlarmSpec(
            alarm_id=alarm_id, fire_at=fire_at, payload=payload,
            repeat_every=repeat_every))
        return alarm_id

    def advance_clock(self, dt: int) -> list[RequestEnvelope]:
        """Advance the device clock, routing fired alarms through submit."""
        return [self.submit(event) for event in self._device.advance_clock(dt)]
