"""Load a fixture graph, look at its schema, and fetch a one-hop neighborhood.

Run: python3 demos/01_knowledge_graph.py
"""

from kgscope import DATA_DIR, load_fixture
from kgscope.kg import ApiBackend, fetch_neighbors, schema_neighbors

ontology, backend = load_fixture(DATA_DIR / "movie_small.kg")
print(ontology)

# The schema says what a person can be asked about, before touching any data.
for rel in schema_neighbors(ontology, "movie", "person"):
    print("  person ->", rel.spec(), "|", rel.description)

# Entity names resolve loosely (case, spaces vs underscores, possessives).
patty = backend.resolve("Patty Ross's")
print("\nresolved:", patty)

# One hop through a single relation; every triple is stamped with its hop.
for t in fetch_neighbors(backend, [patty], ["acted_movies"], hop=1):
    print(f"  hop {t.hop}: {t.subject.label} --{t.predicate}--> {t.object.label}")

# API-style graphs expose functions instead of predicates, with the same interface.
finance = ApiBackend.from_file(DATA_DIR / "finance_api.json")
xyz = finance.resolve("XYZ")
for t in finance.fetch_neighbors([xyz], ["finance_get_market_capitalization", "finance_get_info"], 1):
    print(f"  {t.via}: {t.predicate} = {t.object.text()}")
