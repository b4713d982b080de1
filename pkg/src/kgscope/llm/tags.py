"""Bracketed decision tags such as ``<YES>``/``<NO>``/``<NA>`` in model output."""

from __future__ import annotations

from collections.abc import Iterable

from ..errors import TagParseError

BOUNDARY_TAGS = ("YES", "NO", "NA")


def parse_tagged(text: str, tagset: Iterable[str]) -> str:
    """Return the tag (without brackets) that occurs earliest in ``text``.

    Matching is case-sensitive on the bracketed token, so ``<yes>`` is not ``<YES>``.
    """
    names = [t.strip("<>") for t in tagset]
    if not names:
        raise ValueError("tagset must not be empty")
    hits = [(text.find(f"<{n}>"), n) for n in names]
    hits = [(pos, n) for pos, n in hits if pos >= 0]
    if not hits:
        raise TagParseError(f"none of {', '.join('<%s>' % n for n in names)} found in {text[:80]!r}")
    return min(hits)[1]
