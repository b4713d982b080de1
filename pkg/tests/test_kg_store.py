import json
import threading
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from kgscope.errors import ArgumentError, FixtureFormatError, RegistryError, RetrievalError, ValidationError
from kgscope.kg import (
    ApiBackend,
    EntityRef,
    Literal,
    SparqlBackend,
    Triple,
    api_dispatch,
    dump_fixture,
    fetch_neighbors,
    load_fixture,
    parse_fixture,
    schema_neighbors,
    to_ntriples,
)
from kgscope.kg.sparql import Namespaces

from .conftest import DATA, FIXTURES

rdflib = pytest.importorskip("rdflib")

ONTOLOGY = """[ontology]
REL\tmovie\tperson\tacted_movies\tentity:movie\tMovies the person acted in
REL\tmovie\tmovie\tbox_office\tattr:number\tBox office gross
"""


def test_small_fixture_counts(small):
    ontology, backend = small
    # counted by hand in movie_small.kg: 12 T lines, 4 REL lines
    assert len(backend.triples) == 12
    assert len(ontology) == 4
    assert all(ontology.find(t.subject.entity_type, t.predicate) for t in backend.triples)


def test_empty_triple_section():
    ontology, backend = parse_fixture(ONTOLOGY + "[triples]\n")
    assert len(backend.triples) == 0
    assert backend.fetch_neighbors([EntityRef("x", "", "person")], ["acted_movies"], 1) == []
    assert ontology.relations_for("movie", "person")[0].name == "acted_movies"


def test_undeclared_relation_is_named():
    text = ONTOLOGY + "[triples]\nT\tpatty\tperson\tdirected_movies\tE:m1:movie\n"
    with pytest.raises(ValidationError, match="directed_movies"):
        parse_fixture(text)


def test_dangling_entity_type():
    text = "[ontology]\nREL\tmovie\tperson\tfriend\tentity:alien\tFriends\n"
    with pytest.raises(ValidationError, match="alien"):
        parse_fixture(text)


@pytest.mark.parametrize("text, line", [
    ("[ontology]\nREL\tmovie\tperson\tx\tentity\tno type\n", 2),
    ("[ontology]\n\n# c\nREL\tmovie\tperson\tx\tattr:colour\tbad datatype\n", 4),
    ("[triples]\nT\ta\tperson\n", 2),
    ("T\ta\tperson\tp\tE:b:person\n", 1),
    ("[nodes]\n", 1),
])
def test_format_errors_carry_line_numbers(text, line):
    with pytest.raises(FixtureFormatError) as info:
        parse_fixture(text)
    assert info.value.lineno == line


def test_bad_literal_is_format_error():
    text = ONTOLOGY + "[triples]\n# comment\nT\tm1\tmovie\tbox_office\tL:number:lots\n"
    with pytest.raises(FixtureFormatError) as info:
        parse_fixture(text)
    assert info.value.lineno == 6


def test_schema_neighbors(movie):
    ontology, _ = movie
    names = [r.name for r in schema_neighbors(ontology, "movie", "person")]
    assert "acted_movies" in names and "birthday" in names
    assert schema_neighbors(ontology, "movie", "spaceship") == []
    assert schema_neighbors(ontology, "music", "person") == []
    # declaration order as written in movie.kg
    assert [r.name for r in schema_neighbors(ontology, "movie", "movie")] == [
        "box_office", "release_date", "genre", "budget", "cast"]


def test_fetch_neighbors_patty_ross(small):
    _, backend = small
    patty = backend.resolve("Patty Ross")
    got = fetch_neighbors(backend, [patty], ["acted_movies"], 1)
    expected = {t.key() for t in backend.triples if t.subject.id == "Patty_Ross" and t.predicate == "acted_movies"}
    assert {t.key() for t in got} == expected and len(expected) == 3
    assert all(t.hop == 1 and t.source for t in got)


def test_fetch_neighbors_contracts(small):
    _, backend = small
    patty = backend.resolve("Patty_Ross")
    assert fetch_neighbors(backend, [patty], ["box_office"], 2) == []
    with pytest.raises(ValueError):
        fetch_neighbors(backend, [patty], [], 1)
    with pytest.raises(ValueError):
        fetch_neighbors(backend, [patty], ["birthday"], 0)
    got = fetch_neighbors(backend, [patty], ["birthday"], 3)
    assert [t.hop for t in got] == [3]


def test_resolve_variants(small):
    _, backend = small
    for name in ("Patty Ross", "patty ross", "Patty Ross's", "Patty_Ross"):
        assert backend.resolve(name).id == "Patty_Ross"
    assert backend.resolve("Nobody Here") is None


def test_literal_validation():
    assert Literal("12.5", "number").text() == "12.5"
    assert Literal("02/28/2024, 08:04:08 PT", "datetime").text() == "2024-02-28T08:04:08 PT"
    with pytest.raises(ValidationError):
        Literal("12x", "number")
    with pytest.raises(ValidationError):
        Literal("2024-13-01", "date")
    with pytest.raises(ValidationError):
        Triple(EntityRef("a"), "p", Literal("x"), hop=0)


def test_dump_roundtrip(movie):
    ontology, backend = movie
    text = dump_fixture(ontology, backend.triples, backend.entities())
    o2, b2 = parse_fixture(text)
    assert [r.spec() for r in o2.relations()] == [r.spec() for r in ontology.relations()]
    assert [t.key() for t in b2.triples] == [t.key() for t in backend.triples]


def test_concurrent_reads_match_serial(movie):
    _, backend = movie
    people = [e for e in backend.entities() if e.entity_type == "person"]
    keep = ["acted_movies", "birthday", "spouse"]
    serial = [sorted(t.key() for t in backend.fetch_neighbors([p], keep, 1)) for p in people]
    with ThreadPoolExecutor(8) as pool:
        parallel = list(pool.map(lambda p: sorted(t.key() for t in backend.fetch_neighbors([p], keep, 1)), people * 5))
    assert parallel == serial * 5


# API backend

def test_market_cap_dispatch(finance):
    triples = api_dispatch(finance, "finance_get_market_capitalization", {"ticker_name": "XYZ"})
    assert len(triples) == 1
    t = triples[0]
    assert (t.subject.id, t.predicate, t.object) == ("XYZ", "marketCap", Literal("1250000000", "number"))
    assert t.via == "finance_get_market_capitalization"


def test_zero_arg_function_ignores_extras(finance):
    triples = api_dispatch(finance, "finance_get_market_status", {"unused": 1, "also": "x"})
    assert [(t.predicate, t.object.value) for t in triples] == [("status", "open")]


def test_unknown_function_names_nearest(finance):
    with pytest.raises(RegistryError, match="finance_get_market_capitalization"):
        api_dispatch(finance, "finance_get_market_capitalisation", {"ticker_name": "XYZ"})


def test_missing_required_arg(finance):
    with pytest.raises(ArgumentError, match="ticker_name"):
        api_dispatch(finance, "finance_get_pe_ratio", {"symbol": "XYZ"})


def test_nested_results_flatten_one_level(finance):
    triples = api_dispatch(finance, "finance_get_info", {"ticker_name": "XYZ"})
    got = {t.predicate: t.object for t in triples}
    assert got["sector"] == Literal("Industrials", "text")
    assert got["address.city"] == Literal("Springfield", "text")
    assert got["officers.ceo"] == Literal("Rhea Lindqvist", "text")
    # two levels down stays a canonical record
    assert got["address.geo"] == Literal('{"lat":39.8,"lon":-89.6}', "structured-record")


def test_api_entity_fields_feed_next_hop(finance):
    xyz = finance.resolve("xyz")
    hop1 = finance.fetch_neighbors([xyz], ["finance_get_issuer"], 1)
    issuer = hop1[0].object
    assert isinstance(issuer, EntityRef) and issuer.entity_type == "company"
    hop2 = finance.fetch_neighbors([issuer], ["finance_get_company_employees"], 2)
    assert [(t.predicate, t.object.value, t.hop) for t in hop2] == [("employees", "4200", 2)]


def test_api_partial_failure(finance):
    qrs, xyz = finance.resolve("QRS"), finance.resolve("XYZ")
    got = fetch_neighbors(finance, [qrs, xyz], ["finance_get_pe_ratio"], 1)
    assert [t.subject.id for t in got] == ["XYZ"]
    assert got.failed == {"QRS"} and "timeout" in got.errors[0]
    with pytest.raises(RetrievalError) as info:
        fetch_neighbors(finance, [qrs], ["finance_get_pe_ratio"], 1)
    assert info.value.retryable


def test_api_ontology(finance):
    assert finance.kind == "api"
    assert [r.name for r in finance.ontology.relations_for("finance", "ticker")][:2] == [
        "finance_get_market_capitalization", "finance_get_pe_ratio"]
    spec = finance.tool_specs(["finance_get_pe_ratio"])[0]
    assert spec.startswith("Use the function 'finance_get_pe_ratio'")
    assert json.loads(spec.split("\n", 1)[1])["function"]["parameters"]["required"] == ["ticker_name"]


# SPARQL backend against a local endpoint serving the same graph

class _Endpoint(BaseHTTPRequestHandler):
    graph = None
    hits = 0

    def do_GET(self):
        type(self).hits += 1
        query = parse_qs(urlparse(self.path).query)["query"][0]
        body = self.graph.query(query).serialize(format="json")
        self.send_response(200)
        self.send_header("Content-Type", "application/sparql-results+json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module", params=["movie_small.kg", "movie.kg", "music.kg"])
def sparql_pair(request):
    ontology, memory = load_fixture(DATA / request.param)
    graph = rdflib.Graph()
    graph.parse(data=to_ntriples(memory.triples, memory.entities()), format="nt")
    handler = type("Handler", (_Endpoint,), {"graph": graph})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    backend = SparqlBackend(f"http://127.0.0.1:{server.server_address[1]}/sparql", ontology)
    yield memory, backend
    server.shutdown()
    backend.close()


def _local_keys(triples):
    out = []
    for t in triples:
        o = t.object
        obj = ("E", Namespaces.local(o.id)) if isinstance(o, EntityRef) else ("L", o.datatype, o.value)
        out.append((Namespaces.local(t.subject.id), t.predicate, obj, t.hop))
    return sorted(out)


def test_sparql_matches_memory_backend(sparql_pair):
    memory, sparql = sparql_pair
    ns = Namespaces()
    relations = memory.ontology.relations()
    for entity in memory.entities():
        names = [r.name for r in relations if r.subject_type == entity.entity_type]
        if not names:
            continue
        remote = EntityRef(ns.entity_iri(entity.id), entity.label, entity.entity_type)
        for name in names:
            mem = fetch_neighbors(memory, [entity], [name], 2)
            got = fetch_neighbors(sparql, [remote], [name], 2)
            assert _local_keys(got) == _local_keys(mem), (entity.id, name)


def test_sparql_resolve_and_names(sparql_pair):
    memory, sparql = sparql_pair
    some = memory.triples[0].subject
    ref = sparql.resolve(some.id)
    assert ref is not None and ref.entity_type == some.entity_type
    assert sparql.resolve("No_Such_Thing") is None
    assert some.id in sparql.entity_names()


def test_sparql_transport_failure_is_retryable(small):
    ontology, _ = small
    backend = SparqlBackend("http://127.0.0.1:9/sparql", ontology, timeout=0.5)
    patty = EntityRef(backend.ns.entity_iri("Patty_Ross"), "Patty Ross", "person")
    with pytest.raises(RetrievalError) as info:
        fetch_neighbors(backend, [patty], ["birthday"], 1)
    assert info.value.retryable


@pytest.mark.parametrize("name", FIXTURES)
def test_every_fixture_loads(name):
    ontology, backend = load_fixture(DATA / name)
    assert len(backend.triples) <= 200
    assert ontology.domains
