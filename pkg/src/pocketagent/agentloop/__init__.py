"""Observe/reason/execute loop, extraction, summaries, follow-ups."""

from .extract import (
    DOMAIN_ECOMMERCE,
    DOMAIN_LOCAL_SERVICE,
    ExtractionSchema,
    FixtureExtractor,
    SessionArtifact,
    parse_ordinal,
    parse_price,
    resolve_followup,
    schema_for,
    scroll_extract,
    summarize,
)
from .loop import (
    AgentStep,
    Decision,
    LoopResult,
    Planner,
    RulePlanner,
    make_done_handler,
    make_quiz_handler,
    observation_digest,
    run,
    select_skill,
)

__all__ = [
    "AgentStep",
    "DOMAIN_ECOMMERCE",
    "DOMAIN_LOCAL_SERVICE",
    "Decision",
    "ExtractionSchema",
    "FixtureExtractor",
    "LoopResult",
    "Planner",
    "RulePlanner",
    "SessionArtifact",
    "make_done_handler",
    "make_quiz_handler",
    "observation_digest",
    "parse_ordinal",
    "parse_price",
    "resolve_followup",
    "run",
    "schema_for",
    "scroll_extract",
    "select_skill",
    "summarize",
]
