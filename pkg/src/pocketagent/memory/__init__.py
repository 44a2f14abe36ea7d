"""Working memory and long-term gallery memory."""

from .gallery import (
    FixtureSummarizer,
    GalleryStore,
    MemoryEntry,
    MemoryFile,
    RedactionPolicy,
    SyncResult,
    UserProfile,
    memory_query,
    memory_sync,
    metadata_fallback_entry,
    redact,
    stage,
)
from .working import WorkingMemory, WorkingStore, inject_context

__all__ = [
    "FixtureSummarizer",
    "GalleryStore",
    "MemoryEntry",
    "MemoryFile",
    "RedactionPolicy",
    "SyncResult",
    "UserProfile",
    "WorkingMemory",
    "WorkingStore",
    "inject_context",
    "memory_query",
    "memory_sync",
    "metadata_fallback_entry",
    "redact",
    "stage",
]
