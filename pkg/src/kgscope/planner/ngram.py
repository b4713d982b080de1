"""Character-trigram fuzzy matching of (entity, predicate) pairs against a question."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class CandidatePair:
    entity: str
    predicate: str
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def as_tuple(self) -> tuple[str, str]:
        return (self.entity, self.predicate)


def normalize(text: str) -> str:
    return " ".join(text.replace("_", " ").lower().split())


@lru_cache(maxsize=65536)
def trigrams(text: str) -> frozenset[str]:
    # two boundary markers on each side so that even "" has a trigram ("###")
    padded = f"##{normalize(text)}##"
    return frozenset(padded[i:i + 3] for i in range(len(padded) - 2))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def trigram_similarity(a: str, b: str) -> float:
    return jaccard(trigrams(a), trigrams(b))


def ngram_candidate_pairs(question: str, entity_names, predicate_names, k: int = 3) -> list[CandidatePair]:
    """Top-``k`` (entity, predicate) pairs by trigram Jaccard against the question.

    A pair is scored as the string ``"<entity> <predicate>"``; ties go to the
    lexicographically smaller (entity, predicate).
    """
    if not normalize(question):
        return []
    q = trigrams(question)
    scored = []
    for entity in dict.fromkeys(entity_names):
        for predicate in dict.fromkeys(predicate_names):
            scored.append((jaccard(q, trigrams(f"{entity} {predicate}")), entity, predicate))
    scored.sort(key=lambda s: (-s[0], s[1], s[2]))
    return [CandidatePair(e, p, s) for s, e, p in scored[:k]]
