"""Prompt templates, fingerprints, and the record/replay workflow for model calls.

Run: python3 demos/02_prompts_and_providers.py
"""

import tempfile
from pathlib import Path

from kgscope.llm import Gateway, RecordingProvider, RuleProvider, ScriptedProvider, default_catalog

catalog = default_catalog()
tpl = catalog.get("judge.head2tail")
print("judge.head2tail needs:", sorted(tpl.required_placeholders))

# A rule provider answers from the structured bindings, not the prompt text.
rules = {"judge.head2tail": lambda prompt, req: "Yes" if req.bindings["GOLD"] in req.bindings["PREDICTION"] else "No"}
recorder = RecordingProvider(RuleProvider(rules))
gw = Gateway(recorder)

for pred in ("William Shakespeare", "Christopher Marlowe"):
    verdict = gw.ask("judge.head2tail", QUESTION="who wrote the taming of the shrew?",
                     GOLD="William Shakespeare", PREDICTION=pred)
    print(f"  {pred!r}: {verdict}")

# Every reply is keyed by a fingerprint of (template id, rendered prompt),
# so a recorded run can be replayed exactly, with no model behind it.
with tempfile.TemporaryDirectory() as tmp:
    script = Path(tmp) / "script.jsonl"
    recorder.dump(script)
    replay = Gateway(ScriptedProvider.from_file(script))
    print("replayed:", replay.ask("judge.head2tail", QUESTION="who wrote the taming of the shrew?",
                                  GOLD="William Shakespeare", PREDICTION="Christopher Marlowe"))

print("\nevery request ran at temperature", {e["temperature"] for e in gw.log})
