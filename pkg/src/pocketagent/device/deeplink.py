"""URI template matching for deeplinks.

Patterns look like scheme://host/path/{slot}; a slot captures exactly one
path segment. Slot values are percent-decoded on match and percent-encoded
on fill so URIs never carry raw spaces.
"""

from __future__ import annotations

from typing import Mapping, Optional
from urllib.parse import quote, unquote


def _split(uri: str) -> Optional[tuple[str, list[str]]]:
    if "://" not in uri:
        return None
    scheme, rest = uri.split("://", 1)
    if not scheme or not rest:
        return None
    return scheme, rest.split("/")


def match_pattern(pattern: str, uri: str) -> Optional[dict]:
    """Bind pattern slots against a concrete URI; None when it doesn't match."""
    p = _split(pattern)
    u = _split(uri)
    if p is None or u is None or p[0] != u[0]:
        return None
    p_segs, u_segs = p[1], u[1]
    if len(p_segs) != len(u_segs):
        return None
    slots: dict[str, str] = {}
    for pseg, useg in zip(p_segs, u_segs):
        if pseg.startswith("{") and pseg.endswith("}") and len(pseg) > 2:
            slots[pseg[1:-1]] = unquote(useg)
        elif pseg != useg:
            return None
    return slots


def fill_pattern(pattern: str, values: Mapping[str, str]) -> str:
    """Instantiate a URI template, percent-encoding each slot value."""
    p = _split(pattern)
    if p is None:
        raise ValueError(f"not a URI template: {pattern!r}")
    scheme, segs = p
    out = []
    for seg in segs:
        if seg.startswith("{") and seg.endswith("}") and len(seg) > 2:
            out.append(quote(str(values.get(seg[1:-1], "")), safe=""))
        else:
            out.append(seg)
    return f"{scheme}://" + "/".join(out)
