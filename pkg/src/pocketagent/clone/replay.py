"""Tiered trajectory replay.

Replay never re-walks the recorded gestures. It attempts progressively
simpler launch methods — full intent, deeplink only, bare component,
task-stack restore — and accepts the first attempt whose launch succeeds
and whose reached page validates against the bookmarked signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .. import errors
from ..device import IntentMsg, SimDevice
from ..device.types import Page
from .dumpparse import LaunchDescriptor
from .record import PageSignature

TIER_FULL_INTENT = "full_intent"
TIER_DEEPLINK = "deeplink"
TIER_BARE_COMPONENT = "bare_component"
TIER_TASK_STACK_RESTORE = "task_stack_restore"

TIER_ORDER = (TIER_FULL_INTENT, TIER_DEEPLINK, TIER_BARE_COMPONENT,
              TIER_TASK_STACK_RESTORE)

SIGNATURE_MIN_FRACTION = 0.5


@dataclass(frozen=True)
class Attempt:
    tier: str
    ok: bool
    error: str = ""
    validated: Optional[bool] = None

    def to_dict(self) -> dict:
        return {"tier": self.tier, "ok": self.ok, "error": self.error,
                "validated": self.validated}


@dataclass(frozen=True)
class ReplayOutcome:
    tier_used: str
    page: Page
    attempts: tuple[Attempt, ...]

    def to_dict(self) -> dict:
        return {"tier_used": self.tier_used,
                "activity": self.page.activity,
                "attempts": [a.to_dict() for a in self.attempts]}


def signature_validates(signature: PageSignature, page: Page,
                        min_fraction: float = SIGNATURE_MIN_FRACTION) -> bool:
    """Activity must match and at least half the bookmarked texts must be
    visible on the reached page."""
    if page.activity != signature.activity:
        return False
    if not signature.top_texts:
        return True
    visible = set(page.visible_texts())
    hit = sum(1 for t in signature.top_texts if t in visible)
    return hit / len(signature.top_texts) >= min_fraction


def _tier_intents(descriptor: LaunchDescriptor):
    yield TIER_FULL_INTENT, IntentMsg(
        action=descriptor.action,
        data_uri=descriptor.data_uri,
        component=descriptor.component,
        extras=descriptor.extras,
    )
    yield TIER_DEEPLINK, IntentMsg(
        action=descriptor.action,
        data_uri=descriptor.data_uri,
        component=None,
        extras=(),
    )
    yield TIER_BARE_COMPONENT, IntentMsg(
        action=descriptor.action,
        data_uri=None,
        component=descriptor.component,
        extras=(),
    )


def run_ladder(device: SimDevice, descriptor: LaunchDescriptor,
               validate: Callable[[Page], bool]) -> ReplayOutcome:
    """Attempt the four launch tiers in fixed order; replay is deliberately
    unprivileged so unexported destinations exercise the fallback path."""
    attempts: list[Attempt] = []
    for tier, intent in _tier_intents(descriptor):
        try:
            page = device.launch_intent(intent, privileged=False)
        except errors.AgentError as exc:
            attempts.append(Attempt(tier=tier, ok=False,
                                    error=type(exc).__name__))
            continue
        if validate(page):
            attempts.append(Attempt(tier=tier, ok=True, validated=True))
            return ReplayOutcome(tier_used=tier, page=page,
                                 attempts=tuple(attempts))
        attempts.append(Attempt(tier=tier, ok=False, validated=False,
                                error="SignatureMismatch"))
    try:
        page = device.bring_to_front(descriptor.component[0])
    except errors.AgentError as exc:
        attempts.append(Attempt(tier=TIER_TASK_STACK_RESTORE, ok=False,
                                error=type(exc).__name__))
        failure = errors.AllTiersFailed(descriptor.component[0])
        failure.attempts = tuple(attempts)
        raise failure
    if validate(page):
        attempts.append(Attempt(tier=TIER_TASK_STACK_RESTORE, ok=True,
                                validated=True))
        return ReplayOutcome(tier_used=TIER_TASK_STACK_RESTORE, page=page,
                             attempts=tuple(attempts))
    attempts.append(Attempt(tier=TIER_TASK_STACK_RESTORE, ok=False,
                            validated=False, error="SignatureMismatch"))
    failure = errors.AllTiersFailed(descriptor.component[0])
    failure.attempts = tuple(attempts)
    raise failure


def replay(bookmark, device: SimDevice) -> ReplayOutcome:
    """Replay a bookmark through the tier ladder with signature validation."""
    return run_ladder(
        device, bookmark.descriptor,
        lambda page: signature_validates(bookmark.signature, page))


def launch_skill(device: SimDevice, card, bound_params: Optional[dict] = None
                 ) -> ReplayOutcome:
    """Invoke a skill card: its entry descriptor rides the same ladder, with
    bound parameters overriding captured extras. Validation only requires
    reaching the entry's activity (cards carry no page signature)."""
    descriptor = card.entry
    if bound_params:
        merged = {**descriptor.extras_map(), **bound_params}
        descriptor = LaunchDescriptor(
            action=descriptor.action,
            component=descriptor.component,
            data_uri=descriptor.data_uri,
            extras=tuple(sorted(merged.items())),
            capture_method=descriptor.capture_method,
        )
    target_activity = descriptor.component[1]
    return run_ladder(device, descriptor,
                      lambda page: page.activity == target_activity)
