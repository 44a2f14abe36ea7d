"""Persistence layout for the host process.

    <root>/
      skills/<name>.txt        field-per-line skill cards
      bookmarks/<name>.txt     field-per-line bookmarks
      memory/gallery.md        gallery memory + profile.json
      sessions/<id>/wm.json    working memories
      sessions/<id>/artifacts/<artifact_id>.jsonl
      traces/<trace_id>.json   recorded trajectories
      staging/<task_id>/       task-isolated staged assets

Skill and bookmark files are line-oriented with stable field ordering so
they diff cleanly; values must not contain newlines, and signature texts
must not contain ' | '.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from ..agentloop import SessionArtifact
from ..clone import Bookmark, LaunchDescriptor, PageSignature, SkillCard, Trajectory
from ..memory import GalleryStore, WorkingStore

_TEXT_SEP = " | "


def _write_fields(path: Path, fields: list[tuple[str, str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}: {v}\n" for k, v in fields), encoding="utf-8")


def _read_fields(path: Path) -> dict:
    fields: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if ": " in line:
            key, value = line.split(": ", 1)
            fields[key] = value
        elif line.endswith(":"):
            fields[line[:-1]] = ""
    return fields


def _descriptor_fields(prefix: str, d: LaunchDescriptor) -> list[tuple[str, str]]:
    return [
        (f"{prefix}.action", d.action),
        (f"{prefix}.data_uri", d.data_uri or "-"),
        (f"{prefix}.component", "/".join(d.component)),
        (f"{prefix}.extras", ",".join(f"{k}={v}" for k, v in d.extras)),
        (f"{prefix}.capture_method", d.capture_method),
    ]


def _descriptor_from_fields(prefix: str, fields: dict) -> LaunchDescriptor:
    extras = {}
    for pair in fields.get(f"{prefix}.extras", "").split(","):
        if "=" in pair:
            k, v = pair.split("=", 1)
            extras[k] = v
    data_uri = fields.get(f"{prefix}.data_uri", "-")
    return LaunchDescriptor(
        action=fields[f"{prefix}.action"],
        component=tuple(fields[f"{prefix}.component"].split("/", 1)),
        data_uri=None if data_uri == "-" else data_uri,
        extras=tuple(sorted(extras.items())),
        capture_method=fields.get(f"{prefix}.capture_method", "full_parse"),
    )


class HostStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.skills_dir = self.root / "skills"
        self.bookmarks_dir = self.root / "bookmarks"
        self.traces_dir = self.root / "traces"
        self.staging_dir = self.root / "staging"
        self.gallery = GalleryStore(self.root / "memory")
        self.working = WorkingStore(self.root / "sessions")

    # -- skills ---------------------------------------------------------------

    def save_skill(self, card: SkillCard) -> Path:
        path = self.skills_dir / f"{card.name}.txt"
        _write_fields(path, [
            ("name", card.name),
            ("description", card.description),
            ("trigger_tokens", ", ".join(card.trigger_tokens)),
            ("target_app", card.target_app),
            *_descriptor_fields("entry", card.entry),
            ("trajectory_ref", card.trajectory_ref),
            ("parameters", ", ".join(card.parameters)),
            ("created_at", str(card.created_at)),
        ])
        return path

    def load_skill(self, name: str) -> Optional[SkillCard]:
        path = self.skills_dir / f"{name}.txt"
        if not path.exists():
            return None
        f = _read_fields(path)
        return SkillCard(
            name=f["name"],
            description=f.get("description", ""),
            trigger_tokens=tuple(t for t in f.get("trigger_tokens", "").split(", ")
                                 if t),
            target_app=f["target_app"],
            entry=_descriptor_from_fields("entry", f),
            trajectory_ref=f.get("trajectory_ref", ""),
            parameters=tuple(p for p in f.get("parameters", "").split(", ") if p),
            created_at=int(f.get("created_at", "0")),
        )

    def list_skills(self) -> list[SkillCard]:
        if not self.skills_dir.exists():
            return []
        cards = []
        for path in sorted(self.skills_dir.glob("*.txt")):
            card = self.load_skill(path.stem)
            if card is not None:
                cards.append(card)
        return cards

    # -- bookmarks --------------------------------------------------------------

    def save_bookmark(self, bookmark: Bookmark) -> Path:
        path = self.bookmarks_dir / f"{bookmark.name}.txt"
        _write_fields(path, [
            ("name", bookmark.name),
            *_descriptor_fields("descriptor", bookmark.descriptor),
            ("signature.activity", bookmark.signature.activity),
            ("signature.top_texts", _TEXT_SEP.join(bookmark.signature.top_texts)),
            ("signature.digest", bookmark.signature.digest),
            ("summary", bookmark.summary),
            ("created_at", str(bookmark.created_at)),
        ])
        return path

    def load_bookmark(self, name: str) -> Optional[Bookmark]:
        path = self.bookmarks_dir / f"{name}.txt"
        if not path.exists():
            return None
        f = _read_fields(path)
        texts = tuple(t for t in f.get("signature.top_texts", "").split(_TEXT_SEP)
                      if t)
        return Bookmark(
            name=f["name"],
            descriptor=_descriptor_from_fields("descriptor", f),
            signature=PageSignature(
                activity=f.get("signature.activity", ""),
                top_texts=texts,
                digest=f.get("signature.digest", ""),
            ),
            summary=f.get("summary", ""),
            created_at=int(f.get("created_at", "0")),
        )

    def list_bookmarks(self) -> list[str]:
        if not self.bookmarks_dir.exists():
            return []
        return sorted(p.stem for p in self.bookmarks_dir.glob("*.txt"))

    # -- traces -----------------------------------------------------------------

    def save_trace(self, trajectory: Trajectory, trace_id: str) -> Path:
        path = self.traces_dir / f"{trace_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(trajectory.to_dict(), indent=2, sort_keys=True)
                        + "\n", encoding="utf-8")
        return path

    # -- artifacts ---------------------------------------------------------------

    def artifact_path(self, session_id: str, artifact_id: str) -> Path:
        return self.root / "sessions" / session_id / "artifacts" / \
            f"{artifact_id}.jsonl"

    def save_artifact(self, session_id: str, artifact: SessionArtifact) -> Path:
        path = self.artifact_path(session_id, artifact.artifact_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(artifact.to_jsonl(), encoding="utf-8")
        return path

    def load_artifact(self, session_id: str,
                      artifact_id: str) -> Optional[SessionArtifact]:
        path = self.artifact_path(session_id, artifact_id)
        if not path.exists():
            return None
        return SessionArtifact.from_jsonl(path.read_text(encoding="utf-8"))
