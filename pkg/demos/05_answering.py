"""End-to-end answers, chain-of-thought versus plain, and missing answers.

Run: python3 demos/05_answering.py
"""

from kgscope import DATA_DIR, Pipeline, PipelineConfig, load_fixture
from kgscope.llm import Gateway
from kgscope.testing import toy_provider

_, backend = load_fixture(DATA_DIR / "movie.kg")
gw = Gateway(toy_provider(backend))
qt = "03/01/2024, 10:00:00 PT"

questions = [
    "Which movie directed by Hugo Brandt had the highest box office?",
    "Who is Dean Marsh married to?",
    "What is the box office of Zeta Quest?",  # not in the graph
]
for mode in ("cot", "plain"):
    pipe = Pipeline(backend, gw, PipelineConfig(mode=mode))
    print(f"--- {mode}")
    for q in questions:
        r = pipe.answer(q, qt)
        flag = " (missing)" if r.answer.is_missing else ""
        print(f"{q}\n  -> {r.answer.text}{flag}   {r.plan.summary() if r.plan else r.reason}")

# In cot mode the full reasoning is kept next to the short answer.
r = Pipeline(backend, gw).answer(questions[0], qt)
print("\nreasoning:\n" + r.answer.reasoning)
