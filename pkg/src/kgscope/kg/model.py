"""Core knowledge-graph value types and the schema index."""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from ..errors import ValidationError
from ..timeutil import datetime_to_iso, parse_date, parse_query_time

UNTYPED = "untyped"
DATATYPES = ("text", "number", "date", "datetime", "structured-record")


@dataclass(frozen=True, order=True)
class EntityRef:
    id: str
    label: str = ""
    entity_type: str = UNTYPED

    def __post_init__(self):
        if not self.id:
            raise ValidationError("entity id must be non-empty")
        if not self.label:
            object.__setattr__(self, "label", label_from_id(self.id))


def label_from_id(entity_id: str) -> str:
    local = entity_id.rstrip("/").rsplit("/", 1)[-1].rsplit("#", 1)[-1]
    return local.replace("_", " ")


@dataclass(frozen=True, order=True)
class Literal:
    value: str
    datatype: str = "text"

    def __post_init__(self):
        if self.datatype not in DATATYPES:
            raise ValidationError(f"unknown literal datatype {self.datatype!r}")
        try:
            if self.datatype == "number":
                Decimal(self.value)
            elif self.datatype == "date":
                parse_date(self.value)
            elif self.datatype == "datetime":
                parse_query_time(self.value)
        except (InvalidOperation, ValueError) as exc:
            raise ValidationError(f"{self.value!r} is not a valid {self.datatype}") from exc

    def text(self) -> str:
        """Canonical prompt rendering: numbers verbatim, dates ISO."""
        if self.datatype == "datetime":
            return datetime_to_iso(self.value)
        return self.value

    @classmethod
    def record(cls, data) -> Literal:
        return cls(canonical_json(data), "structured-record")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=str)


def object_text(obj: EntityRef | Literal) -> str:
    return obj.label if isinstance(obj, EntityRef) else obj.text()


def render_triple(triple: Triple) -> str:
    """One evidence line as shown to the model."""
    return f"TRIPLE: ({triple.subject.label}, {triple.predicate}, {object_text(triple.object)})"


@dataclass(frozen=True)
class Triple:
    subject: EntityRef
    predicate: str
    object: EntityRef | Literal
    hop: int = 1
    source: str = ""
    # schema relation the triple was fetched through; differs from predicate for API results
    via: str = ""

    def __post_init__(self):
        if self.hop < 1:
            raise ValidationError(f"triple hop must be >= 1, got {self.hop}")
        if not self.via:
            object.__setattr__(self, "via", self.predicate)

    def key(self) -> tuple:
        """Identity ignoring hop and provenance."""
        return (self.subject.id, self.predicate, _object_key(self.object))

    def with_hop(self, hop: int) -> Triple:
        return Triple(self.subject, self.predicate, self.object, hop, self.source, self.via)


def _object_key(obj):
    if isinstance(obj, EntityRef):
        return ("E", obj.id)
    return ("L", obj.datatype, obj.value)


@dataclass(frozen=True)
class SchemaRelation:
    name: str
    subject_type: str
    object_kind: str  # "entity" or "attribute"
    object_type: str  # entity type name, or a literal datatype
    description: str
    domain: str

    def __post_init__(self):
        if self.object_kind not in ("entity", "attribute"):
            raise ValidationError(f"relation {self.name}: object kind must be entity or attribute")
        if self.object_kind == "attribute" and self.object_type not in DATATYPES:
            raise ValidationError(f"relation {self.name}: unknown datatype {self.object_type!r}")
        if not self.description.strip():
            raise ValidationError(f"relation {self.name}: description must be non-empty")

    @property
    def is_entity(self) -> bool:
        return self.object_kind == "entity"

    def spec(self) -> str:
        kind = f"entity:{self.object_type}" if self.is_entity else f"attr:{self.object_type}"
        return f"{self.name}({self.subject_type} -> {kind})"


class Ontology:
    """Relations indexed by ``(domain, entity_type)`` in declaration order.

    Lookups are total: unknown keys give an empty list.
    """

    def __init__(self, relations: Iterable[SchemaRelation] = (), types: Iterable[tuple[str, str]] = ()):
        self._index: dict[tuple[str, str], list[SchemaRelation]] = {}
        self._rank: dict[str, int] = {}
        domains: list[str] = []
        for domain, etype in types:
            self._index.setdefault((domain, etype), [])
            if domain not in domains:
                domains.append(domain)
        for rel in relations:
            bucket = self._index.setdefault((rel.domain, rel.subject_type), [])
            if any(r.name == rel.name for r in bucket):
                raise ValidationError(
                    f"duplicate relation {rel.name!r} for ({rel.domain}, {rel.subject_type})"
                )
            bucket.append(rel)
            self._rank.setdefault(rel.name, len(self._rank))
            if rel.domain not in domains:
                domains.append(rel.domain)
        self.domains = tuple(domains)
        for bucket in self._index.values():
            for rel in bucket:
                if rel.is_entity and (rel.domain, rel.object_type) not in self._index:
                    raise ValidationError(
                        f"relation {rel.name!r} points to undeclared entity type "
                        f"{rel.object_type!r} in domain {rel.domain!r}"
                    )

    def relations_for(self, domain: str, entity_type: str) -> list[SchemaRelation]:
        return list(self._index.get((domain, entity_type), ()))

    def has_type(self, entity_type: str, domain: str | None = None) -> bool:
        if domain is None:
            return any(t == entity_type for _, t in self._index)
        return (domain, entity_type) in self._index

    def domains_for_type(self, entity_type: str) -> list[str]:
        return [d for d in self.domains if (d, entity_type) in self._index]

    def types(self, domain: str | None = None) -> list[str]:
        return [t for d, t in self._index if domain is None or d == domain]

    def relations(self) -> list[SchemaRelation]:
        return [r for bucket in self._index.values() for r in bucket]

    def relation_names(self) -> list[str]:
        return list(self._rank)

    def declares(self, entity_type: str, predicate: str) -> bool:
        return any(
            r.name == predicate
            for (_, t), bucket in self._index.items()
            if t == entity_type
            for r in bucket
        )

    def find(self, entity_type: str, predicate: str) -> SchemaRelation | None:
        for (_, t), bucket in self._index.items():
            if t == entity_type:
                for r in bucket:
                    if r.name == predicate:
                        return r
        return None

    def rank(self, name: str) -> int:
        """Declaration position of a relation name; unknown names sort last."""
        return self._rank.get(name, len(self._rank))

    def __len__(self):
        return sum(len(b) for b in self._index.values())

    def __repr__(self):
        return f"Ontology(domains={list(self.domains)}, relations={len(self)})"


def schema_neighbors(ontology: Ontology, domain: str, entity_type: str) -> list[SchemaRelation]:
    """Relations one schema hop away from ``entity_type`` in ``domain``."""
    return ontology.relations_for(domain, entity_type)


@dataclass
class Subgraph:
    triples: list[Triple] = field(default_factory=list)
    frontier: list[EntityRef] = field(default_factory=list)
    hops_done: int = 0
    errors: list[str] = field(default_factory=list)

    def predicates(self) -> set[str]:
        return {t.predicate for t in self.triples}

    def vias(self) -> set[str]:
        return {t.via for t in self.triples}

    def keys(self) -> set[tuple]:
        return {t.key() for t in self.triples}

    def __len__(self):
        return len(self.triples)
