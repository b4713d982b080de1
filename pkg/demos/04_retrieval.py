"""Execute a plan against the graph and linearize the evidence for the summarizer.

Run: python3 demos/04_retrieval.py
"""

from kgscope import DATA_DIR, RetrievalPlan, execute_plan, linearize, load_fixture

ontology, backend = load_fixture(DATA_DIR / "movie.kg")
patty = backend.resolve("Patty Ross")

# Two hops, nothing excluded: everything reachable from Patty Ross.
everything = RetrievalPlan("movie", (patty,), (frozenset(), frozenset()), 2)
print("unfiltered:", len(execute_plan(everything, backend)), "triples")

# Excluding irrelevant relations at hop 1 also prunes what hop 2 can reach.
focused = RetrievalPlan("movie", (patty,), (
    frozenset({"birthday", "birth_place", "awards", "spouse", "directed_movies"}),
    frozenset({"release_date", "genre", "budget", "cast"}),
), 2)
sub = execute_plan(focused, backend)
print("focused:", len(sub), "triples")

evidence = linearize(sub, ontology, budget=8)
print(evidence.text)
print(f"({evidence.triple_count} lines kept, truncated={evidence.truncated})")
