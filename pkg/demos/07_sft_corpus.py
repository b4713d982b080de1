"""Generate a fine-tuning corpus: keep correct reasoning, substitute gold otherwise.

Run: python3 demos/07_sft_corpus.py
"""

import json
import tempfile
from pathlib import Path

from kgscope import DATA_DIR, Pipeline, build_sft_dataset, load_fixture
from kgscope.llm import Gateway
from kgscope.testing import toy_provider

_, backend = load_fixture(DATA_DIR / "movie.kg")
gw = Gateway(toy_provider(backend))
pipe = Pipeline(backend, gw)
items = [json.loads(line) for line in (DATA_DIR / "train_movie.jsonl").read_text().splitlines()]

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "sft.jsonl"
    stats = build_sft_dataset(items, lambda it: pipe.evidence(it["query"], it["query_time"])[2], gw, out)
    rows = [json.loads(line) for line in out.read_text().splitlines()]

print(json.dumps(stats.to_dict(), indent=2))
for branch in ("kept_cot", "gold_substituted"):
    row = next(r for r in rows if r["branch"] == branch)
    print(f"\n[{branch}] {row['question_id']}\ncompletion: {row['completion']}")
