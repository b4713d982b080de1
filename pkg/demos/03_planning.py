"""Build a retrieval plan: topic entity, domain, excluded relations per hop, hop count.

Run: python3 demos/03_planning.py
"""

from kgscope import DATA_DIR, load_fixture
from kgscope.llm import Gateway
from kgscope.planner import PlannerConfig, build_plan, ngram_candidate_pairs
from kgscope.testing import toy_provider

ontology, backend = load_fixture(DATA_DIR / "movie_small.kg")
gw = Gateway(toy_provider(backend))  # rule-based stand-in for a chat model
question = "Which of Patty Ross's film has achieved the highest box office success globally?"

plan = build_plan(question, "03/01/2024, 10:00:00 PT", ontology, backend, gw)
print(plan.summary())
for hop, (offered, dropped) in enumerate(zip(plan.offered, plan.excluded), start=1):
    print(f"  hop {hop}: offered {list(offered)}, dropped {sorted(dropped)}")

# Hop 1 keeps acted_movies and drops birthday/birth_place; hop 2 reaches box_office.
# Capping the hops shows why multi-hop planning matters:
short = build_plan(question, "03/01/2024, 10:00:00 PT", ontology, backend, gw, PlannerConfig(max_hops=1))
print("\nwith max_hops=1:", short.summary())

# Similarity filtering needs no model call for the relation choice.
sim = build_plan(question, "", ontology, backend, gw, PlannerConfig(filter_mode="similarity", top_k=2))
print("similarity top-2:", sim.summary())

# Trigram candidate pairs, the alternative entity-linking route.
for pair in ngram_candidate_pairs("When was Patty Ross born?", backend.entity_names(), ontology.relation_names()):
    print(f"  candidate {pair.as_tuple()} score={pair.score:.3f}")
