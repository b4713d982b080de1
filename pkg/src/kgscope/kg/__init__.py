from .api import ApiBackend, ApiFunction, api_dispatch, flatten_result
from .backend import Backend, FetchResult, MemoryBackend, fetch_neighbors
from .fixture import dump_fixture, load_fixture, parse_fixture
from .model import (
    UNTYPED,
    EntityRef,
    Literal,
    Ontology,
    SchemaRelation,
    Subgraph,
    Triple,
    object_text,
    render_triple,
    schema_neighbors,
)
from .sparql import SparqlBackend, to_ntriples

__all__ = [
    "ApiBackend", "ApiFunction", "api_dispatch", "flatten_result",
    "Backend", "FetchResult", "MemoryBackend", "fetch_neighbors",
    "dump_fixture", "load_fixture", "parse_fixture",
    "UNTYPED", "EntityRef", "Literal", "Ontology", "SchemaRelation", "Subgraph", "Triple",
    "object_text", "render_triple", "schema_neighbors",
    "SparqlBackend", "to_ntriples",
]
