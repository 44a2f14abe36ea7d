"""Distill recorded trajectories into skill cards and bookmarks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from .. import errors
from ..textutil import content_words
from .dumpparse import LaunchDescriptor
from .record import PageSignature, Trajectory


class SkillSummarizer(Protocol):
    def describe(self, signature: PageSignature) -> str: ...


class SignatureSummarizer:
    """Stub naming model: the page's leading text plus its activity."""

    def describe(self, signature: PageSignature) -> str:
        top = signature.top_texts[0] if signature.top_texts else ""
        if top:
            return f"{top} on {signature.activity}"
        return signature.activity


@dataclass(frozen=True)
class SkillCard:
    """A cloned behavior, named for its purpose and replayable by entry."""

    name: str
    description: str
    trigger_tokens: tuple[str, ...]
    target_app: str
    entry: LaunchDescriptor
    trajectory_ref: str
    parameters: tuple[str, ...] = ()
    created_at: int = 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "trigger_tokens": list(self.trigger_tokens),
            "target_app": self.target_app,
            "entry": self.entry.to_dict(),
            "trajectory_ref": self.trajectory_ref,
            "parameters": list(self.parameters),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SkillCard":
        return cls(
            name=d["name"],
            description=d.get("description", ""),
            trigger_tokens=tuple(d.get("trigger_tokens", ())),
            target_app=d["target_app"],
            entry=LaunchDescriptor.from_dict(d["entry"]),
            trajectory_ref=d.get("trajectory_ref", ""),
            parameters=tuple(d.get("parameters", ())),
            created_at=int(d.get("created_at", 0)),
        )


@dataclass(frozen=True)
class Bookmark:
    name: str
    descriptor: LaunchDescriptor
    signature: PageSignature
    summary: str
    created_at: int = 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "descriptor": self.descriptor.to_dict(),
            "signature": self.signature.to_dict(),
            "summary": self.summary,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Bookmark":
        return cls(
            name=d["name"],
            descriptor=LaunchDescriptor.from_dict(d["descriptor"]),
            signature=PageSignature.from_dict(d["signature"]),
            summary=d.get("summary", ""),
            created_at=int(d.get("created_at", 0)),
        )


def slugify(text: str) -> str:
    return "-".join(content_words(text)) or "skill"


def distill_skill(trajectory: Trajectory, descriptor: LaunchDescriptor,
                  summarizer: Optional[SkillSummarizer],
                  final_signature: PageSignature,
                  trajectory_ref: str,
                  created_at: int = 0) -> SkillCard:
    """Turn a recorded trajectory plus its captured entry into a skill card.

    The trajectory is preserved by reference even though replay does not
    need it. Summarizer failure falls back to the raw component name.
    """
    if trajectory.final_activity != descriptor.component[1]:
        raise errors.FinalMismatch(
            f"trajectory ends at {trajectory.final_activity!r}, "
            f"descriptor names {descriptor.component[1]!r}")
    app_id = descriptor.component[0]
    try:
        if summarizer is None:
            raise RuntimeError("no summarizer")
        description = summarizer.describe(final_signature)
        name = slugify(description)
    except Exception:
        description = f"{app_id}/{descriptor.component[1]}"
        name = description
    return SkillCard(
        name=name,
        description=description,
        trigger_tokens=tuple(content_words(description)),
        target_app=app_id,
        entry=descriptor,
        trajectory_ref=trajectory_ref,
        parameters=tuple(sorted(descriptor.extras_map())),
        created_at=created_at,
    )


def make_bookmark(name: str, descriptor: LaunchDescriptor,
                  signature: PageSignature, summary: str,
                  created_at: int = 0) -> Bookmark:
    return Bookmark(name=name, descriptor=descriptor, signature=signature,
                    summary=summary, created_at=created_at)
