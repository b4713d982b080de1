"""Plan execution: expand the topic entities hop by hop, then linearize the evidence."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

from .errors import RetrievalError
from .kg.backend import Backend, fetch_neighbors
from .kg.model import EntityRef, Literal, Ontology, Subgraph, Triple, object_text, render_triple
from .planner.core import RetrievalPlan, lookup_domain

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 200


@dataclass(frozen=True)
class LinearizedEvidence:
    lines: tuple[str, ...]
    triple_count: int
    truncated: bool

    @property
    def text(self) -> str:
        return "\n".join(self.lines)

    def __bool__(self):
        return bool(self.lines)


def _unique(seq):
    return list(dict.fromkeys(seq))


def execute_plan(plan: RetrievalPlan, backend: Backend, ontology: Ontology | None = None) -> Subgraph:
    """Breadth-first expansion following ``plan``.

    At hop i every frontier entity is expanded through the relations its
    type declares, minus everything excluded at hops 1..i. Each entity is
    expanded at most once, so cycles in the data terminate.
    """
    ontology = ontology or backend.ontology
    out = Subgraph()
    seen_keys: set[tuple] = set()
    visited: set[str] = set()
    frontier = list(plan.topic_entities)

    for hop in range(1, plan.hops + 1):
        excluded = plan.excluded_through(hop)
        todo = [e for e in _unique(frontier) if e.id not in visited]
        visited.update(e.id for e in todo)
        new_entities: list[EntityRef] = []
        for etype in _unique(e.entity_type for e in todo):
            domain = lookup_domain(ontology, plan.domain, etype)
            if domain is None:
                continue
            keep = [r.name for r in ontology.relations_for(domain, etype) if r.name not in excluded]
            if not keep:
                continue
            group = [e for e in todo if e.entity_type == etype]
            try:
                result = fetch_neighbors(backend, group, keep, hop)
            except RetrievalError as exc:
                log.warning("hop %d fetch failed for %s: %s", hop, [e.label for e in group], exc)
                out.errors.append(str(exc))
                continue
            out.errors.extend(result.errors)
            for t in result:
                if t.key() in seen_keys:
                    continue
                seen_keys.add(t.key())
                out.triples.append(t)
                if isinstance(t.object, EntityRef) and t.object.id not in visited:
                    new_entities.append(t.object)
        frontier = _unique(new_entities)
        out.hops_done = hop
    out.frontier = frontier
    return out


def linearize(subgraph: Subgraph, ontology: Ontology | None = None, budget: int = DEFAULT_BUDGET) -> LinearizedEvidence:
    """Render triples one per line in a stable order, keeping at most ``budget``.

    Order: hop, relation declaration rank, object text, subject label.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")

    def rank(t: Triple) -> int:
        return ontology.rank(t.via) if ontology is not None else 0

    ordered = sorted(
        subgraph.triples,
        key=lambda t: (t.hop, rank(t), t.predicate, object_text(t.object), t.subject.label),
    )
    kept = ordered[:budget]
    return LinearizedEvidence(tuple(render_triple(t) for t in kept), len(kept), len(ordered) > budget)


def triple_to_dict(t: Triple) -> dict:
    if isinstance(t.object, EntityRef):
        obj = {"entity": t.object.id, "label": t.object.label, "type": t.object.entity_type}
    else:
        obj = {"literal": t.object.value, "datatype": t.object.datatype}
    return {
        "subject": t.subject.id, "subject_label": t.subject.label, "predicate": t.predicate,
        "object": obj, "hop": t.hop, "source": t.source, "via": t.via,
    }


def triple_from_dict(d: dict) -> Triple:
    obj = d["object"]
    if "entity" in obj:
        o = EntityRef(obj["entity"], obj.get("label", ""), obj.get("type", "untyped"))
    else:
        o = Literal(obj["literal"], obj["datatype"])
    return Triple(EntityRef(d["subject"], d.get("subject_label", "")), d["predicate"], o,
                  d.get("hop", 1), d.get("source", ""), d.get("via", ""))


def dump_subgraph(subgraph: Subgraph, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        for t in subgraph.triples:
            fh.write(json.dumps(triple_to_dict(t), ensure_ascii=False) + "\n")
