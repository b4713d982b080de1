"""Answer generation over linearized evidence, with missing-answer detection."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import KGScopeError, ScriptMissError
from .llm.gateway import Gateway
from .retriever import LinearizedEvidence

log = logging.getLogger(__name__)

MODES = ("cot", "plain")
IDK = "I don't know"

_MISSING_EXACT = ("i don't know",)
_MISSING_PREFIX = ("i'm sorry i can't find",)
_ANSWER_MARKER = re.compile(r"(?:^|\s)Answer:[ \t]*(.*)", flags=re.MULTILINE)


@dataclass(frozen=True)
class Answer:
    text: str
    is_missing: bool
    reasoning: str | None = None
    mode: str = "cot"
    error: str | None = None

    @classmethod
    def missing(cls, mode: str = "cot", error: str | None = None) -> Answer:
        return cls(IDK, True, None, mode, error)


def _fold(text: str) -> str:
    text = text.replace("’", "'").replace("‘", "'").replace(",", "")
    return " ".join(text.lower().split()).rstrip(".!")


def is_missing_text(text: str | None) -> bool:
    """True for the "I don't know" family and for empty output."""
    if text is None:
        return True
    folded = _fold(text)
    if not folded:
        return True
    return folded in _MISSING_EXACT or folded.startswith(_MISSING_PREFIX)


def extract_final(completion: str) -> str:
    """Text after the last ``Answer:`` marker, else the last non-empty line."""
    if not completion.strip():
        raise ValueError("completion must be non-empty")
    hits = [m.group(1).strip() for m in _ANSWER_MARKER.finditer(completion)]
    if hits and hits[-1]:
        return hits[-1]
    lines = [ln.strip() for ln in completion.splitlines() if ln.strip()]
    return lines[-1]


def summarize(question: str, evidence: LinearizedEvidence, query_time: str, mode: str, gateway: Gateway,
              strict_evidence: bool = True) -> Answer:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if strict_evidence and not evidence.lines:
        return Answer.missing(mode, "no evidence")
    try:
        completion = gateway.ask(
            f"summarize.{mode}", QUESTION=question, QUERY_TIME=query_time or "", CONTENT="\n".join(evidence.lines),
        )
    except ScriptMissError:
        raise
    except KGScopeError as exc:
        log.warning("summarizer provider failure: %s", exc)
        return Answer.missing(mode, str(exc))
    if not completion.strip():
        return Answer("", True, completion if mode == "cot" else None, mode)
    text = extract_final(completion) if mode == "cot" else completion.strip()
    return Answer(text, is_missing_text(text), completion if mode == "cot" else None, mode)
