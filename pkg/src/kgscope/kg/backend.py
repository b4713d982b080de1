"""Backend protocol and the in-memory fixture backend."""

from __future__ import annotations

import logging
import re
from collections.abc import Iterable, Sequence

from ..errors import RetrievalError
from .model import EntityRef, Ontology, Triple

log = logging.getLogger(__name__)


class FetchResult(list):
    """A list of triples plus the per-entity failures that did not abort the batch."""

    def __init__(self, triples: Iterable[Triple] = (), errors: Iterable[str] = ()):
        super().__init__(triples)
        self.errors = list(errors)
        self.failed: set[str] = set()

    def fail(self, entity_id: str, message: str):
        self.failed.add(entity_id)
        self.errors.append(message)


class Backend:
    """Read-only KG access shared by the planner and the retriever.

    ``kind`` is ``"triples"`` for graph stores (fixture, SPARQL) and ``"api"``
    for function-call KGs; the planner picks its sufficiency signal from it.
    """

    kind = "triples"
    name = "backend"
    ontology: Ontology

    def fetch_neighbors(self, entities: Sequence[EntityRef], keep: Iterable[str], hop: int) -> FetchResult:
        raise NotImplementedError

    def resolve(self, name: str) -> EntityRef | None:
        raise NotImplementedError

    def entity_names(self) -> list[str]:
        return []


def fetch_neighbors(backend: Backend, entities: Sequence[EntityRef], keep: Iterable[str], hop: int) -> FetchResult:
    """Triples with subject in ``entities`` and predicate in ``keep``, stamped with ``hop``."""
    keep = list(keep)
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    if not keep:
        raise ValueError("keep must name at least one relation")
    result = backend.fetch_neighbors(list(entities), keep, hop)
    if entities and not result and result.failed >= {e.id for e in entities}:
        raise RetrievalError("; ".join(result.errors), retryable=True)
    return result


_PUNCT = re.compile(r"[^\w\s]")


def _norm_name(text: str) -> str:
    text = text.replace("_", " ").replace("’", "'").lower()
    text = re.sub(r"'s\b", "", text)
    return " ".join(_PUNCT.sub(" ", text).split())


class MemoryBackend(Backend):
    """Immutable triple store built from a fixture file."""

    kind = "triples"

    def __init__(self, ontology: Ontology, triples: Iterable[Triple], entities: Iterable[EntityRef] = (), name="memory"):
        self.ontology = ontology
        self.name = name
        self._triples = tuple(triples)
        by_subject: dict[str, list[Triple]] = {}
        known: dict[str, EntityRef] = {}
        for e in entities:
            known.setdefault(e.id, e)
        for t in self._triples:
            by_subject.setdefault(t.subject.id, []).append(t)
            known.setdefault(t.subject.id, t.subject)
            if isinstance(t.object, EntityRef):
                known.setdefault(t.object.id, t.object)
        self._by_subject = {k: tuple(v) for k, v in by_subject.items()}
        self._entities = dict(known)
        self._by_norm: dict[str, EntityRef] = {}
        for e in self._entities.values():
            for key in (_norm_name(e.id), _norm_name(e.label)):
                self._by_norm.setdefault(key, e)

    @property
    def triples(self) -> tuple[Triple, ...]:
        return self._triples

    def entities(self) -> list[EntityRef]:
        return list(self._entities.values())

    def entity_names(self) -> list[str]:
        return list(self._entities)

    def resolve(self, name: str) -> EntityRef | None:
        if name in self._entities:
            return self._entities[name]
        return self._by_norm.get(_norm_name(name))

    def fetch_neighbors(self, entities, keep, hop):
        keep = set(keep)
        out = FetchResult()
        for entity in entities:
            for t in self._by_subject.get(entity.id, ()):
                if t.predicate in keep:
                    out.append(Triple(t.subject, t.predicate, t.object, hop, f"{self.name}:{t.predicate}", t.predicate))
        return out

    def __repr__(self):
        return f"MemoryBackend({self.name!r}, triples={len(self._triples)}, {self.ontology!r})"
