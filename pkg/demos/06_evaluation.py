"""Judge answers and report accuracy, hallucination, missing and truthfulness.

Run: python3 demos/06_evaluation.py
"""

import json

from kgscope import DATA_DIR, Pipeline, aggregate, load_fixture
from kgscope.evalkit import evaluate, from_counts
from kgscope.llm import Gateway
from kgscope.testing import toy_provider

_, backend = load_fixture(DATA_DIR / "movie.kg")
gw = Gateway(toy_provider(backend))
pipe = Pipeline(backend, gw)

questions = [json.loads(line) for line in (DATA_DIR / "questions_movie.jsonl").read_text().splitlines()]
verdicts = []
for q in questions:
    answer = pipe.answer(q["query"], q["query_time"]).answer
    v = evaluate(q["id"], q["query"], q["gold"], answer, "crag", gw, q.get("split", "unsplit"))
    verdicts.append(v)
    print(f"{q['id']} {v.classification:<13} {answer.text!r} (gold {q['gold']!r})")

print()
print(aggregate(verdicts).to_text("movie questions"))

# Truthfulness is accuracy minus hallucination; missing answers cost nothing.
print(aggregate(from_counts(accurate=732, hallucination=202, missing=66)).to_text("counts 732/202/66"))
