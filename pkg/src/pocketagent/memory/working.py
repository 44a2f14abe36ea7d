"""Per-session working memory: goal, steps, observations, artifacts.

Working memory survives app switches; a session can be persisted and
resumed by id without losing its place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import errors
from .gallery import MemoryFile, UserProfile, memory_query


@dataclass
class WorkingMemory:
    session_id: str
    goal: str = ""
    step_index: int = 0
    turns: list = field(default_factory=list)  # (role, text)
    screenshot_refs: list = field(default_factory=list)
    compressed_observations: list = field(default_factory=list)
    last_action_result: str = ""
    artifacts: list = field(default_factory=list)  # artifact ids

    def set_goal(self, goal: str) -> None:
        self.goal = goal

    def note_turn(self, role: str, text: str) -> None:
        self.turns.append((role, text))

    def note_observation(self, text: str) -> None:
        self.compressed_observations.append(text)

    def note_screenshot(self, screenshot_id: str) -> None:
        self.screenshot_refs.append(screenshot_id)

    def note_action_result(self, result: str) -> None:
        """The only event that advances step_index."""
        self.last_action_result = result
        self.step_index += 1

    def note_artifact(self, artifact_id: str) -> None:
        self.artifacts.append(artifact_id)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "goal": self.goal,
            "step_index": self.step_index,
            "turns": [list(t) for t in self.turns],
            "screenshot_refs": list(self.screenshot_refs),
            "compressed_observations": list(self.compressed_observations),
            "last_action_result": self.last_action_result,
            "artifacts": list(self.artifacts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorkingMemory":
        return cls(
            session_id=d["session_id"],
            goal=d.get("goal", ""),
            step_index=int(d.get("step_index", 0)),
            turns=[tuple(t) for t in d.get("turns", [])],
            screenshot_refs=list(d.get("screenshot_refs", [])),
            compressed_observations=list(d.get("compressed_observations", [])),
            last_action_result=d.get("last_action_result", ""),
            artifacts=list(d.get("artifacts", [])),
        )


class WorkingStore:
    """Persists working memories under sessions/<id>/wm.json."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _path(self, session_id: str) -> Path:
        return self.root / session_id / "wm.json"

    def persist(self, wm: WorkingMemory) -> None:
        path = self._path(wm.session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(wm.to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    def resume(self, session_id: str) -> WorkingMemory:
        path = self._path(session_id)
        if not path.exists():
            raise errors.UnknownSession(session_id)
        return WorkingMemory.from_dict(
            json.loads(path.read_text(encoding="utf-8")))


def inject_context(wm: WorkingMemory, profile: Optional[UserProfile],
                   mfile: Optional[MemoryFile], k: int = 5,
                   memory_top: int = 3) -> str:
    """Assemble the downstream context block, ordered sections:

    goal, last k compressed observations, top-weight profile tags (only when
    profile injection is enabled), top-scored memory entries for the goal.
    """
    sections: list[str] = []
    if wm.goal:
        sections.append(f"goal: {wm.goal}")
    if k > 0 and wm.compressed_observations:
        recent = wm.compressed_observations[-k:]
        sections.append("recent observations:\n" +
                        "\n".join(f"- {o}" for o in recent))
    if profile is not None and profile.inject and profile.tag_weights:
        sections.append("profile tags: " + ", ".join(profile.top_tags()))
    if mfile is not None and wm.goal:
        hits = memory_query(wm.goal, mfile)[:memory_top]
        if hits:
            sections.append("relevant memory:\n" +
                            "\n".join(f"- {name} (score {score})"
                                      for name, score in hits))
    return "\n\n".join(sections)
