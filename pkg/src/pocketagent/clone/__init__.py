"""Behavior cloning and trajectory replay."""

from .distill import (
    Bookmark,
    SignatureSummarizer,
    SkillCard,
    distill_skill,
    make_bookmark,
    slugify,
)
from .dumpparse import (
    CAPTURE_FULL_PARSE,
    CAPTURE_KEYWORD_FILTER,
    LaunchDescriptor,
    introspect_entry,
    parse_dump,
)
from .record import PageSignature, Recorder, TraceStep, Trajectory
from .replay import (
    Attempt,
    ReplayOutcome,
    TIER_ORDER,
    launch_skill,
    replay,
    run_ladder,
    signature_validates,
)

__all__ = [
    "Attempt",
    "Bookmark",
    "CAPTURE_FULL_PARSE",
    "CAPTURE_KEYWORD_FILTER",
    "LaunchDescriptor",
    "PageSignature",
    "Recorder",
    "ReplayOutcome",
    "SignatureSummarizer",
    "SkillCard",
    "TIER_ORDER",
    "TraceStep",
    "Trajectory",
    "distill_skill",
    "introspect_entry",
    "launch_skill",
    "make_bookmark",
    "parse_dump",
    "replay",
    "run_ladder",
    "signature_validates",
    "slugify",
]
