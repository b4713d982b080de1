"""SPARQL endpoint backend using one fixed subject->object query per (entity, predicate)."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from urllib.parse import quote, unquote

import httpx

from ..errors import RetrievalError
from .backend import Backend, FetchResult
from .model import UNTYPED, EntityRef, Literal, Ontology, Triple, label_from_id

log = logging.getLogger(__name__)

DEFAULT_NS = "http://kgscope.local/"
XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

ONE_HOP_QUERY = "SELECT ?o WHERE {{ <{subject}> <{predicate}> ?o . }}"
DESCRIBE_QUERY = "SELECT ?p ?o WHERE {{ <{subject}> ?p ?o . }} LIMIT 500"
SUBJECTS_QUERY = "SELECT DISTINCT ?s WHERE {{ ?s ?p ?o . }} LIMIT {limit}"

_XSD_FOR = {"number": XSD + "decimal", "date": XSD + "date"}


class Namespaces:
    def __init__(self, base: str = DEFAULT_NS):
        self.entity = base + "entity/"
        self.relation = base + "relation/"
        self.type = base + "type/"

    def entity_iri(self, entity_id: str) -> str:
        if entity_id.startswith(("http://", "https://")):
            return entity_id
        return self.entity + quote(entity_id.replace(" ", "_"), safe="_-.()',")

    def relation_iri(self, name: str) -> str:
        return self.relation + quote(name, safe="_-.")

    def type_iri(self, name: str) -> str:
        return self.type + quote(name, safe="_-.")

    @staticmethod
    def local(iri: str) -> str:
        return unquote(iri.rstrip("/").rsplit("/", 1)[-1].rsplit("#", 1)[-1])


class SparqlBackend(Backend):
    """Queries an HTTP SPARQL endpoint; results are read from the JSON results format.

    Entity ids are full IRIs. Object types and literal datatypes come from the
    ontology relation being followed, so the one-hop query stays a single
    triple pattern.
    """

    kind = "triples"

    def __init__(self, endpoint: str, ontology: Ontology, namespace: str = DEFAULT_NS,
                 timeout: float = 15.0, max_workers: int = 8, client: httpx.Client | None = None,
                 name: str = "sparql"):
        self.endpoint = endpoint
        self.ontology = ontology
        self.ns = Namespaces(namespace)
        self.name = name
        self.max_workers = max_workers
        self._client = client or httpx.Client(timeout=timeout)

    def close(self):
        self._client.close()

    def select(self, query: str) -> list[dict]:
        try:
            resp = self._client.get(
                self.endpoint,
                params={"query": query},
                headers={"Accept": "application/sparql-results+json"},
            )
            resp.raise_for_status()
            return resp.json()["results"]["bindings"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise RetrievalError(f"SPARQL request to {self.endpoint} failed: {exc}", retryable=True) from exc

    def _one_hop(self, entity: EntityRef, predicate: str, hop: int) -> list[Triple]:
        rel = self.ontology.find(entity.entity_type, predicate)
        rows = self.select(ONE_HOP_QUERY.format(
            subject=self.ns.entity_iri(entity.id), predicate=self.ns.relation_iri(predicate)))
        out = []
        for row in rows:
            cell = row["o"]
            if cell["type"] == "uri":
                otype = rel.object_type if rel is not None and rel.is_entity else UNTYPED
                obj = EntityRef(cell["value"], label_from_id(Namespaces.local(cell["value"])), otype)
            else:
                if rel is not None and not rel.is_entity:
                    dtype = rel.object_type
                else:
                    dtype = {v: k for k, v in _XSD_FOR.items()}.get(cell.get("datatype", ""), "text")
                obj = Literal(cell["value"], dtype)
            out.append(Triple(entity, predicate, obj, hop, f"{self.name}:{predicate}"))
        return out

    def fetch_neighbors(self, entities, keep, hop):
        pairs = []
        for entity in entities:
            declared = [p for p in keep if entity.entity_type == UNTYPED or self.ontology.declares(entity.entity_type, p)]
            pairs.extend((entity, p) for p in declared)

        def run(pair):
            try:
                return self._one_hop(pair[0], pair[1], hop), None
            except RetrievalError as exc:
                return [], f"{pair[0].id} {pair[1]}: {exc}"

        out = FetchResult()
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            for (entity, _), (triples, err) in zip(pairs, pool.map(run, pairs)):
                out.extend(triples)
                if err:
                    out.fail(entity.id, err)
        return out

    def resolve(self, name: str) -> EntityRef | None:
        iri = self.ns.entity_iri(name)
        rows = self.select(DESCRIBE_QUERY.format(subject=iri))
        if not rows:
            return None
        etype = UNTYPED
        for row in rows:
            if row["p"]["value"] == RDF_TYPE:
                etype = Namespaces.local(row["o"]["value"])
                break
        return EntityRef(iri, label_from_id(Namespaces.local(iri)), etype)

    def entity_names(self, limit: int = 10000) -> list[str]:
        rows = self.select(SUBJECTS_QUERY.format(limit=limit))
        return [Namespaces.local(r["s"]["value"]) for r in rows if r["s"]["type"] == "uri"]


def _nt_literal(lit: Literal) -> str:
    esc = lit.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r")
    if lit.datatype in _XSD_FOR:
        return f'"{esc}"^^<{_XSD_FOR[lit.datatype]}>'
    return f'"{esc}"'


def to_ntriples(triples, entities=(), namespace: str = DEFAULT_NS) -> str:
    """Serialise fixture triples as N-Triples so any SPARQL store can load them."""
    ns = Namespaces(namespace)
    lines = []
    typed = {}
    for e in entities:
        typed[e.id] = e.entity_type
    for t in triples:
        typed.setdefault(t.subject.id, t.subject.entity_type)
        if isinstance(t.object, EntityRef):
            typed.setdefault(t.object.id, t.object.entity_type)
    for eid, etype in typed.items():
        if etype != UNTYPED:
            lines.append(f"<{ns.entity_iri(eid)}> <{RDF_TYPE}> <{ns.type_iri(etype)}> .")
    for t in triples:
        s = f"<{ns.entity_iri(t.subject.id)}>"
        p = f"<{ns.relation_iri(t.predicate)}>"
        o = f"<{ns.entity_iri(t.object.id)}>" if isinstance(t.object, EntityRef) else _nt_literal(t.object)
        lines.append(f"{s} {p} {o} .")
    return "\n".join(lines) + "\n"
