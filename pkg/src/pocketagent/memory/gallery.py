"""Long-term gallery memory.

A producer pipeline scans the media store incrementally, summarizes each
asset (model stub or metadata fallback), redacts, and appends entries to a
human-readable memory file. Consumers (query, stage, inject) never write.

Memory file layout (whole-file replace on every write):

    # gallery-memory v1
    cursor: <id>

    ## <filename>
    - captured_at: <ms>
    - kind: model|metadata_fallback
    - objects: a, b
    - scene: s
    - event: e
    - text: <free text>

Field values must not contain newlines; object names must not contain
commas. Fixtures and summarizers honor that by construction.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Protocol

from .. import errors
from ..device import MediaAsset, SimDevice
from ..textutil import tokenize

HEADER = "# gallery-memory v1"

KIND_MODEL = "model"
KIND_FALLBACK = "metadata_fallback"

DEFAULT_PATTERNS = (
    r"(?<!\d)\d{11}(?!\d)",            # bare 11-digit phone numbers
    r"(?<![0-9Xx])\d{17}[0-9Xx](?![0-9Xx])",  # 18-char national-id shapes
    r"addr:\S+",                        # explicit address markers
)


@dataclass
class RedactionPolicy:
    patterns: tuple[str, ...] = DEFAULT_PATTERNS
    replacement: str = "[REDACTED]"

    def __post_init__(self):
        if not self.replacement:
            raise ValueError("replacement must be non-empty")
        self._compiled = [re.compile(p) for p in self.patterns]

    def compiled(self) -> list[re.Pattern]:
        return self._compiled


def redact(text: str, policy: RedactionPolicy) -> str:
    for pattern in policy.compiled():
        text = pattern.sub(policy.replacement, text)
    return text


@dataclass
class UserProfile:
    """Aggregated tag weights distilled from gallery entries."""

    tag_weights: dict = field(default_factory=dict)
    enabled: bool = True
    inject: bool = True

    def bump(self, tag: str) -> None:
        tag = tag.strip().lower()
        if tag:
            self.tag_weights[tag] = self.tag_weights.get(tag, 0) + 1

    def top_tags(self, n: int = 5) -> list[str]:
        ranked = sorted(self.tag_weights.items(), key=lambda kv: (-kv[1], kv[0]))
        return [tag for tag, _ in ranked[:n]]

    def to_dict(self) -> dict:
        return {"tag_weights": dict(sorted(self.tag_weights.items())),
                "enabled": self.enabled, "inject": self.inject}

    @classmethod
    def from_dict(cls, d: dict) -> "UserProfile":
        return cls(tag_weights=dict(d.get("tag_weights", {})),
                   enabled=bool(d.get("enabled", True)),
                   inject=bool(d.get("inject", True)))


@dataclass(frozen=True)
class MemoryEntry:
    filename: str
    captured_at: int
    summary_kind: str
    objects: tuple[str, ...] = ()
    scene: str = ""
    event: str = ""
    free_text: str = ""

    def tokens(self) -> set[str]:
        bag = " ".join((*self.objects, self.scene, self.event, self.free_text))
        return set(tokenize(bag))

    def tags(self) -> list[str]:
        return [t for t in (*self.objects, self.scene, self.event) if t]


@dataclass
class MemoryFile:
    entries: list[MemoryEntry] = field(default_factory=list)
    cursor: int = 0

    def to_text(self) -> str:
        lines = [HEADER, f"cursor: {self.cursor}"]
        for entry in self.entries:
            lines.append("")
            lines.append(f"## {entry.filename}")
            lines.append(f"- captured_at: {entry.captured_at}")
            lines.append(f"- kind: {entry.summary_kind}")
            lines.append(f"- objects: {', '.join(entry.objects)}")
            lines.append(f"- scene: {entry.scene}")
            lines.append(f"- event: {entry.event}")
            lines.append(f"- text: {entry.free_text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MemoryFile":
        mfile = cls()
        current: Optional[dict] = None

        def flush():
            nonlocal current
            if current is not None:
                mfile.entries.append(MemoryEntry(
                    filename=current.get("filename", ""),
                    captured_at=int(current.get("captured_at", "0") or 0),
                    summary_kind=current.get("kind", KIND_MODEL),
                    objects=tuple(o.strip() for o in
                                  current.get("objects", "").split(",") if o.strip()),
                    scene=current.get("scene", ""),
                    event=current.get("event", ""),
                    free_text=current.get("text", ""),
                ))
            current = None

        for line in text.splitlines():
            if line.startswith("cursor:"):
                mfile.cursor = int(line.split(":", 1)[1].strip() or 0)
            elif line.startswith("## "):
                flush()
                current = {"filename": line[3:].strip()}
            elif line.startswith("- ") and current is not None and ":" in line:
                key, value = line[2:].split(":", 1)
                current[key.strip()] = value.strip()
        flush()
        return mfile


class Summarizer(Protocol):
    def summarize(self, asset: MediaAsset) -> MemoryEntry: ...


class FixtureSummarizer:
    """Default model stub: reads the asset's fixture truth descriptor."""

    def summarize(self, asset: MediaAsset) -> MemoryEntry:
        truth = asset.truth
        parts = []
        if truth.objects:
            parts.append("a photo of " + ", ".join(truth.objects))
        if truth.scene:
            parts.append(f"at {truth.scene}")
        if truth.event:
            parts.append(f"during {truth.event}")
        return MemoryEntry(
            filename=asset.filename,
            captured_at=asset.captured_at,
            summary_kind=KIND_MODEL,
            objects=truth.objects,
            scene=truth.scene,
            event=truth.event,
            free_text=" ".join(parts),
        )


def metadata_fallback_entry(asset: MediaAsset) -> MemoryEntry:
    """Simplified summary from image metadata only; keeps the pipeline alive."""
    return MemoryEntry(
        filename=asset.filename,
        captured_at=asset.captured_at,
        summary_kind=KIND_FALLBACK,
        free_text=(f"{asset.filename} in {asset.folder}, "
                   f"{asset.width}x{asset.height}, captured at {asset.captured_at}"),
    )


def _redact_entry(entry: MemoryEntry, policy: RedactionPolicy) -> MemoryEntry:
    return replace(
        entry,
        filename=redact(entry.filename, policy),
        objects=tuple(redact(o, policy) for o in entry.objects),
        scene=redact(entry.scene, policy),
        event=redact(entry.event, policy),
        free_text=redact(entry.free_text, policy),
    )


@dataclass
class SyncResult:
    appended: list[MemoryEntry]
    profile: UserProfile


class GalleryStore:
    """Owns the on-disk memory file and profile under one directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.memory_path = self.root / "gallery.md"
        self.profile_path = self.root / "profile.json"

    def load_file(self) -> MemoryFile:
        if not self.memory_path.exists():
            return MemoryFile()
        return MemoryFile.from_text(self.memory_path.read_text(encoding="utf-8"))

    def load_profile(self) -> UserProfile:
        if not self.profile_path.exists():
            return UserProfile()
        import json
        return UserProfile.from_dict(
            json.loads(self.profile_path.read_text(encoding="utf-8")))

    def save(self, mfile: MemoryFile, profile: UserProfile) -> None:
        import json
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            _atomic_write(self.memory_path, mfile.to_text())
            _atomic_write(self.profile_path,
                          json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise errors.StorageWriteFailure(str(exc)) from exc


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def memory_sync(device: SimDevice, store: GalleryStore, summarizer: Summarizer,
                policy: Optional[RedactionPolicy] = None) -> SyncResult:
    """Incrementally scan new media into the memory file.

    Per asset the summarizer produces a model entry; if it raises, a
    metadata fallback entry keeps the pipeline going. Every text field is
    redacted before write; the write replaces the whole file atomically.
    """
    policy = policy or RedactionPolicy()
    mfile = store.load_file()
    profile = store.load_profile()
    appended: list[MemoryEntry] = []
    for asset in device.media_list(mfile.cursor):
        try:
            entry = summarizer.summarize(asset)
        except Exception:
            entry = metadata_fallback_entry(asset)
        entry = _redact_entry(entry, policy)
        appended.append(entry)
        mfile.entries.append(entry)
        mfile.cursor = max(mfile.cursor, asset.asset_id)
        for tag in entry.tags():
            profile.bump(tag)
    if appended:
        store.save(mfile, profile)
    return SyncResult(appended=appended, profile=profile)


def memory_query(query: str, mfile: MemoryFile) -> list[tuple[str, int]]:
    """Token-overlap retrieval: score = distinct query tokens present in the
    entry; order by score desc, captured_at desc, filename asc."""
    q_tokens = set(tokenize(query))
    scored = []
    for entry in mfile.entries:
        score = len(q_tokens & entry.tokens())
        if score >= 1:
            scored.append((entry, score))
    scored.sort(key=lambda es: (-es[1], -es[0].captured_at, es[0].filename))
    return [(entry.filename, score) for entry, score in scored]


def stage(filenames: Iterable[str], device: SimDevice, staging_root: Path | str,
          task_id: str) -> tuple[Path, list[str]]:
    """Reconcile names against the media store and collect survivors into a
    task-isolated staging folder (reference files, not pixel copies)."""
    if not task_id:
        raise ValueError("task_id must be non-empty")
    import json
    survivors = []
    for name in filenames:
        asset = device.media_by_filename(name)
        if asset is not None:
            survivors.append(asset)
    if not survivors:
        raise errors.EmptyAfterReconcile(task_id)
    folder = Path(staging_root) / task_id
    if folder.exists():
        for old in folder.iterdir():
            old.unlink()
    folder.mkdir(parents=True, exist_ok=True)
    for asset in survivors:
        ref = {"asset_id": asset.asset_id, "filename": asset.filename,
               "folder": asset.folder}
        (folder / asset.filename).write_text(
            json.dumps(ref, sort_keys=True) + "\n", encoding="utf-8")
    return folder, [a.filename for a in survivors]
