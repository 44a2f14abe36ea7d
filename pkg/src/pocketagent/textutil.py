"""Text normalization shared by echo cancellation, grounding, and retrieval."""

from __future__ import annotations

import re

_WHITESPACE = re.compile(r"\s+")
_NON_WORD = re.compile(r"[^0-9a-z\s]+")
_TOKEN = re.compile(r"[0-9a-z]+")
_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")

STOPWORDS = frozenset({
    "a", "an", "and", "at", "for", "in", "is", "it", "me", "my", "of", "on",
    "or", "the", "to", "with",
})


def normalize_text(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    lowered = _NON_WORD.sub(" ", text.lower())
    return _WHITESPACE.sub(" ", lowered).strip()


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; camelCase splits into separate words."""
    return _TOKEN.findall(_CAMEL.sub(" ", text).lower())


def content_words(text: str) -> list[str]:
    """Tokens minus stopwords, deduplicated, original order kept."""
    return list(dict.fromkeys(t for t in tokenize(text) if t not in STOPWORDS))
