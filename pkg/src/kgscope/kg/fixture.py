"""Tab-separated fixture format.

A fixture has an ``[ontology]`` section and a ``[triples]`` section::

    [ontology]
    REL	movie	person	acted_movies	entity:movie	Movies the person acted in
    TYPE	movie	genre
    [triples]
    ENT	Patty_Ross	person	Patty Ross
    T	Patty_Ross	person	acted_movies	E:Sunset_Run:movie
    T	Sunset_Run	movie	box_office	L:number:1250000

``#`` starts a comment line. ``TYPE`` declares an entity type with no
outgoing relations and ``ENT`` gives an entity an explicit label; both are
optional.
"""

from __future__ import annotations

import os
from pathlib import Path

from ..errors import FixtureFormatError, ValidationError
from .backend import MemoryBackend
from .model import DATATYPES, EntityRef, Literal, Ontology, SchemaRelation, Triple

SECTIONS = ("ontology", "triples")


def load_fixture(path: str | os.PathLike) -> tuple[Ontology, MemoryBackend]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FixtureFormatError(f"cannot read fixture: {exc}", path=path) from exc
    ontology, backend = parse_fixture(text, source=str(path))
    backend.name = path.stem
    return ontology, backend


def parse_fixture(text: str, source: str = "<fixture>") -> tuple[Ontology, MemoryBackend]:
    relations: list[SchemaRelation] = []
    types: list[tuple[str, str]] = []
    raw_triples: list[tuple[int, list[str]]] = []
    labels: dict[str, tuple[str, str]] = {}
    section = None

    def fail(msg, lineno):
        raise FixtureFormatError(msg, lineno=lineno, path=source)

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip().lower()
            if section not in SECTIONS:
                fail(f"unknown section [{section}]", lineno)
            continue
        fields = line.rstrip("\r\n").split("\t")
        tag = fields[0].strip()
        if section is None:
            fail("record outside of a section", lineno)
        if section == "ontology":
            if tag == "REL":
                if len(fields) < 6:
                    fail("REL needs: domain, subject_type, name, object kind, description", lineno)
                domain, subject_type, name, kind_spec = (f.strip() for f in fields[1:5])
                description = " ".join(f.strip() for f in fields[5:]).strip()
                kind, _, otype = kind_spec.partition(":")
                if kind not in ("entity", "attr") or not otype:
                    fail(f"bad object kind {kind_spec!r}; expected entity:TYPE or attr:DATATYPE", lineno)
                if kind == "attr" and otype not in DATATYPES:
                    fail(f"unknown datatype {otype!r}", lineno)
                if not description:
                    fail(f"relation {name!r} has an empty description", lineno)
                relations.append(
                    SchemaRelation(name, subject_type, "entity" if kind == "entity" else "attribute", otype, description, domain)
                )
            elif tag == "TYPE":
                if len(fields) != 3:
                    fail("TYPE needs: domain, type", lineno)
                types.append((fields[1].strip(), fields[2].strip()))
            else:
                fail(f"unexpected record {tag!r} in [ontology]", lineno)
        else:
            if tag == "T":
                if len(fields) != 5:
                    fail("T needs: subject_id, subject_type, predicate, object", lineno)
                raw_triples.append((lineno, [f.strip() for f in fields[1:]]))
            elif tag == "ENT":
                if len(fields) not in (3, 4):
                    fail("ENT needs: id, type[, label]", lineno)
                labels[fields[1].strip()] = (fields[2].strip(), fields[3].strip() if len(fields) == 4 else "")
            else:
                fail(f"unexpected record {tag!r} in [triples]", lineno)

    ontology = Ontology(relations, types)
    entity_types: dict[str, str] = {eid: t for eid, (t, _) in labels.items()}

    def entity(eid, etype, lineno):
        if not ontology.has_type(etype):
            raise ValidationError(f"{source}:{lineno}: dangling entity type {etype!r} for {eid!r}")
        seen = entity_types.setdefault(eid, etype)
        if seen != etype:
            raise ValidationError(f"{source}:{lineno}: entity {eid!r} typed both {seen!r} and {etype!r}")
        return EntityRef(eid, labels.get(eid, ("", ""))[1], etype)

    triples = []
    for lineno, (sid, stype, pred, obj) in raw_triples:
        subject = entity(sid, stype, lineno)
        rel = ontology.find(stype, pred)
        if rel is None:
            raise ValidationError(f"{source}:{lineno}: relation {pred!r} is not declared for type {stype!r}")
        if obj.startswith("E:"):
            oid, sep, otype = obj[2:].rpartition(":")
            if not sep or not oid:
                raise FixtureFormatError(f"bad entity object {obj!r}", lineno=lineno, path=source)
            if not rel.is_entity or rel.object_type != otype:
                raise ValidationError(f"{source}:{lineno}: {pred!r} expects {rel.object_kind}:{rel.object_type}, got entity:{otype}")
            value = entity(oid, otype, lineno)
        elif obj.startswith("L:"):
            parts = obj.split(":", 2)
            if len(parts) != 3:
                raise FixtureFormatError(f"bad literal object {obj!r}", lineno=lineno, path=source)
            _, dtype, lexical = parts
            if rel.is_entity or rel.object_type != dtype:
                raise ValidationError(f"{source}:{lineno}: {pred!r} expects {rel.object_kind}:{rel.object_type}, got attr:{dtype}")
            try:
                value = Literal(lexical, dtype)
            except ValidationError as exc:
                raise FixtureFormatError(str(exc), lineno=lineno, path=source) from exc
        else:
            raise FixtureFormatError(f"object must start with E: or L:, got {obj!r}", lineno=lineno, path=source)
        triples.append(Triple(subject, pred, value, 1, f"fixture:{lineno}"))

    extra = [EntityRef(eid, label, t) for eid, (t, label) in labels.items()]
    for e in extra:
        if not ontology.has_type(e.entity_type):
            raise ValidationError(f"{source}: dangling entity type {e.entity_type!r} for {e.id!r}")
    return ontology, MemoryBackend(ontology, triples, extra)


def dump_fixture(ontology: Ontology, triples, entities=()) -> str:
    """Inverse of :func:`parse_fixture` (modulo comments and hop stamps)."""
    lines = ["[ontology]"]
    for rel in ontology.relations():
        kind = f"entity:{rel.object_type}" if rel.is_entity else f"attr:{rel.object_type}"
        lines.append("\t".join(["REL", rel.domain, rel.subject_type, rel.name, kind, rel.description]))
    with_rel = {(r.domain, r.subject_type) for r in ontology.relations()}
    for domain in ontology.domains:
        for etype in ontology.types(domain):
            if (domain, etype) not in with_rel:
                lines.append(f"TYPE\t{domain}\t{etype}")
    lines.append("[triples]")
    for e in entities:
        lines.append(f"ENT\t{e.id}\t{e.entity_type}\t{e.label}")
    for t in triples:
        if isinstance(t.object, EntityRef):
            obj = f"E:{t.object.id}:{t.object.entity_type}"
        else:
            obj = f"L:{t.object.datatype}:{t.object.value}"
        lines.append("\t".join(["T", t.subject.id, t.subject.entity_type, t.predicate, obj]))
    return "\n".join(lines) + "\n"
