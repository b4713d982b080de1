import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgscope.kg import EntityRef, Literal, Triple, load_fixture, parse_fixture, render_triple
from kgscope.kg.backend import MemoryBackend
from kgscope.kg.model import Ontology, SchemaRelation
from kgscope.llm import Gateway
from kgscope.planner import RetrievalPlan, build_plan
from kgscope.retriever import dump_subgraph, execute_plan, linearize, triple_from_dict, triple_to_dict
from kgscope.testing import toy_provider

from .conftest import DATA, FIXTURES, QT
from .oracles import bfs_closure

PATTY = "Which of Patty Ross's film has achieved the highest box office success globally?"


def plan_for(entity, domain, hops, excluded=None):
    excluded = excluded or [frozenset()] * hops
    return RetrievalPlan(domain, (entity,), tuple(frozenset(x) for x in excluded), hops)


def test_patty_ross_plan_retrieval(small):
    ontology, backend = small
    plan = build_plan(PATTY, QT, ontology, backend, Gateway(toy_provider(backend)))
    sub = execute_plan(plan, backend)
    assert sub.hops_done == 2
    hop1 = {(t.subject.id, t.predicate) for t in sub.triples if t.hop == 1}
    hop2 = {(t.subject.id, t.predicate) for t in sub.triples if t.hop == 2}
    assert hop1 == {("Patty_Ross", "acted_movies")}
    assert hop2 == {(m, "box_office") for m in ("Sunset_Run", "Harbor_Lights", "Quiet_Orchard")}
    assert "birthday" not in sub.predicates() and "birth_place" not in sub.predicates()
    assert len(sub) == 6


def test_all_relations_excluded_gives_empty(small):
    ontology, backend = small
    patty = backend.resolve("Patty Ross")
    names = {r.name for r in ontology.relations_for("movie", "person")}
    sub = execute_plan(plan_for(patty, "movie", 2, [names, set()]), backend)
    assert sub.triples == [] and sub.hops_done == 2


@pytest.mark.parametrize("name", FIXTURES)
def test_matches_bfs_oracle_on_fixtures(name):
    ontology, backend = load_fixture(DATA / name)
    checked = 0
    for entity in backend.entities():
        for domain in ontology.domains_for_type(entity.entity_type):
            if not ontology.relations_for(domain, entity.entity_type):
                continue
            sub = execute_plan(plan_for(entity, domain, 3), backend)
            got = {t.key(): t.hop for t in sub.triples}
            assert got == bfs_closure(backend.triples, ontology, [entity], 3, domain=domain), entity.id
            checked += 1
    assert checked >= 3


@pytest.mark.parametrize("name", FIXTURES)
def test_excluded_predicates_never_retrieved(name):
    ontology, backend = load_fixture(DATA / name)
    names = ontology.relation_names()
    for i, entity in enumerate(backend.entities()):
        domains = ontology.domains_for_type(entity.entity_type)
        if not domains:
            continue
        excluded = [set(names[i % len(names)::3]), set(names[(i + 1) % len(names)::5]), set()]
        sub = execute_plan(plan_for(entity, domains[0], 3, excluded), backend)
        banned = set().union(*excluded[:1])
        assert not {t.predicate for t in sub.triples} & banned
        for t in sub.triples:
            assert t.predicate not in set().union(*excluded[:t.hop])
        expected = bfs_closure(backend.triples, ontology, [entity], 3, excluded, domain=domains[0])
        assert {t.key(): t.hop for t in sub.triples} == expected


# random fixtures: two entity types with every relation kind, random edges (cycles allowed)

TYPES = ("a", "b")
RELATIONS = [
    SchemaRelation("ab", "a", "entity", "b", "a to b", "d"),
    SchemaRelation("aa", "a", "entity", "a", "a to a", "d"),
    SchemaRelation("ba", "b", "entity", "a", "b to a", "d"),
    SchemaRelation("an", "a", "attribute", "number", "a number", "d"),
    SchemaRelation("bt", "b", "attribute", "text", "b text", "d"),
]


@st.composite
def random_graph(draw):
    n = draw(st.integers(2, 8))
    ents = [EntityRef(f"e{i}", f"E{i}", draw(st.sampled_from(TYPES))) for i in range(n)]
    triples = []
    for _ in range(draw(st.integers(0, 30))):
        s = draw(st.sampled_from(ents))
        rels = [r for r in RELATIONS if r.subject_type == s.entity_type]
        rel = draw(st.sampled_from(rels))
        if rel.is_entity:
            targets = [e for e in ents if e.entity_type == rel.object_type]
            if not targets:
                continue
            obj = draw(st.sampled_from(targets))
        else:
            obj = Literal(str(draw(st.integers(0, 9))), rel.object_type)
        triples.append(Triple(s, rel.name, obj))
    seed = draw(st.sampled_from(ents))
    hops = draw(st.integers(1, 3))
    names = [r.name for r in RELATIONS]
    excluded = [set(draw(st.lists(st.sampled_from(names), max_size=2))) for _ in range(hops)]
    return ents, triples, seed, hops, excluded


@settings(max_examples=250, deadline=None)
@given(random_graph())
def test_matches_bfs_oracle_on_random_graphs(case):
    ents, triples, seed, hops, excluded = case
    ontology = Ontology(RELATIONS)
    backend = MemoryBackend(ontology, list(dict.fromkeys(triples)), ents)
    sub = execute_plan(plan_for(seed, "d", hops, excluded), backend)
    assert {t.key(): t.hop for t in sub.triples} == bfs_closure(backend.triples, ontology, [seed], hops, excluded)
    assert len(sub.keys()) == len(sub.triples)


def test_monotone_in_hops(movie):
    ontology, backend = movie
    for entity in backend.entities():
        prev = set()
        for h in (1, 2, 3):
            keys = execute_plan(plan_for(entity, "movie", h), backend).keys()
            assert prev <= keys
            prev = keys


def test_cycles_terminate():
    text = "\n".join([
        "[ontology]", "REL\tx\tn\tnext\tentity:n\tnext", "[triples]",
        "T\ta\tn\tnext\tE:b:n", "T\tb\tn\tnext\tE:a:n",
    ])
    ontology, backend = parse_fixture(text)
    sub = execute_plan(plan_for(backend.resolve("a"), "x", 3), backend)
    assert [(t.subject.id, t.hop) for t in sub.triples] == [("a", 1), ("b", 2)]
    assert sub.hops_done == 3 and sub.frontier == []


# linearization

def test_linearize_small_budget(small):
    ontology, backend = small
    patty = backend.resolve("Patty Ross")
    sub = execute_plan(plan_for(patty, "movie", 2), backend)
    ev = linearize(sub, ontology, budget=3)
    assert len(ev.lines) == 3 and ev.truncated and ev.triple_count == 3
    assert ev.lines[0] == "TRIPLE: (Patty Ross, acted_movies, Harbor Lights)"
    full = linearize(sub, ontology)
    assert not full.truncated and full.lines[:3] == ev.lines
    assert full.text.count("\n") == len(full.lines) - 1


def test_linearize_budget_truncates():
    rel = SchemaRelation("p", "t", "attribute", "number", "a number", "d")
    s = EntityRef("s", "S", "t")
    triples = [Triple(s, "p", Literal(str(i), "number")) for i in range(40)]
    backend = MemoryBackend(Ontology([rel]), triples, [s])
    sub = execute_plan(plan_for(s, "d", 1), backend)
    ev = linearize(sub, backend.ontology, budget=30)
    assert len(ev.lines) == 30 and ev.truncated
    assert not linearize(sub, backend.ontology, budget=40).truncated
    with pytest.raises(ValueError):
        linearize(sub, budget=0)


def test_linearize_order_is_stable(movie):
    ontology, backend = movie
    patty = backend.resolve("Patty Ross")
    sub = execute_plan(plan_for(patty, "movie", 3), backend)
    a = linearize(sub, ontology)
    sub.triples.reverse()
    assert linearize(sub, ontology) == a
    hop_of = {render_triple(t): t.hop for t in sub.triples}
    hops = [hop_of[line] for line in a.lines]
    assert hops == sorted(hops)


def test_empty_evidence_is_falsy():
    from kgscope.kg.model import Subgraph
    ev = linearize(Subgraph())
    assert not ev and ev.lines == () and not ev.truncated


def test_dump_roundtrip(tmp_path, small):
    ontology, backend = small
    sub = execute_plan(plan_for(backend.resolve("Patty Ross"), "movie", 2), backend)
    path = tmp_path / "sub.jsonl"
    dump_subgraph(sub, path)
    rows = [json.loads(x) for x in path.read_text().splitlines()]
    assert len(rows) == len(sub)
    back = [triple_from_dict(r) for r in rows]
    assert [t.key() for t in back] == [t.key() for t in sub.triples]
    assert [t.hop for t in back] == [t.hop for t in sub.triples]
    assert triple_to_dict(back[0]) == rows[0]


def test_api_plan_execution(finance):
    xyz = finance.resolve("XYZ")
    plan = RetrievalPlan("finance", (xyz,), (frozenset(), frozenset()), 2)
    sub = execute_plan(plan, finance)
    assert ("XYZ", "marketCap") in {(t.subject.id, t.predicate) for t in sub.triples}
    assert any(t.hop == 2 and t.predicate == "employees" for t in sub.triples)
