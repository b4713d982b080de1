"""Embedding-similarity relation filter.

The embedder is pluggable. :class:`HashingEmbedder` is a dependency-free
character n-gram embedding good enough for fixtures; any object with an
``encode(list[str]) -> ndarray`` method (a sentence-transformers model, a DPR
question encoder wrapper) can be dropped in.
"""

from __future__ import annotations

import hashlib
import re
from collections.abc import Sequence

import numpy as np

from ..kg.model import SchemaRelation
from .ngram import normalize


class HashingEmbedder:
    def __init__(self, dim: int = 2048, n: int = 3):
        self.dim = dim
        self.n = n

    def _index(self, gram: str) -> int:
        return int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little") % self.dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            padded = f" {normalize(text)} "
            for i in range(max(len(padded) - self.n + 1, 0)):
                out[row, self._index(padded[i:i + self.n])] += 1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return out / norms


def remove_mentions(question: str, labels: Sequence[str]) -> str:
    """Drop the longest case-insensitive occurrence of each entity label from the question."""
    out = question
    for label in sorted(labels, key=len, reverse=True):
        for candidate in (label, label.replace("_", " ")):
            if not candidate:
                continue
            m = re.search(re.escape(candidate), out, flags=re.IGNORECASE)
            if m:
                out = out[:m.start()] + out[m.end():]
                break
    return " ".join(out.split())


def relation_text(rel: SchemaRelation) -> str:
    return f"{rel.name.replace('_', ' ')}: {rel.description}"


def rank_relations(query: str, relations: Sequence[SchemaRelation], k: int = 30, embedder=None) -> list[tuple[SchemaRelation, float]]:
    """Top-``k`` relations by cosine similarity; ties keep declaration order."""
    if not relations:
        return []
    embedder = embedder or HashingEmbedder()
    vecs = np.asarray(embedder.encode([query] + [relation_text(r) for r in relations]), dtype=np.float64)
    q, rel_vecs = vecs[0], vecs[1:]
    denom = np.linalg.norm(rel_vecs, axis=1) * (np.linalg.norm(q) or 1.0)
    denom[denom == 0] = 1.0
    scores = rel_vecs @ q / denom
    order = sorted(range(len(relations)), key=lambda i: (-round(float(scores[i]), 12), i))
    return [(relations[i], float(scores[i])) for i in order[:k]]
