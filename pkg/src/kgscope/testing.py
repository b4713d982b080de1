"""A rule-based stand-in for a chat model, good enough to drive the pipeline on fixtures.

It reads the structured bindings of each request instead of "understanding"
the prompt, so every answer is reproducible:

* entity/domain: longest entity label found in the question
* relation filter: keep relations whose name shares a word stem with the question
* hop boundary: ``<YES>`` once the best-matching relation shows up in the triples
* summarizer: answer from the best-matching predicate (max/min for superlatives)
* judge: normalized exact or containment match against the gold answer
"""

from __future__ import annotations

import json
import random
import re
from collections.abc import Iterable

from .kg.backend import Backend
from .kg.model import Ontology
from .llm.gateway import ChatRequest, Provider, RuleProvider
from .timeutil import mdy, parse_query_time

SYNONYMS = {
    "born": "birth", "birthplace": "place", "where": "place", "city": "place",
    "married": "spouse", "wife": "spouse", "husband": "spouse",
    "grossed": "box", "gross": "box", "grossing": "box", "earned": "box",
    "starring": "acted", "starred": "acted", "directed": "directed", "director": "directed",
    "film": "movies", "films": "movies", "released": "release", "cost": "budget", "band": "member", "bands": "member",
    "worth": "market", "capitalization": "market", "employees": "employees",
}
HIGH = ("highest", "most", "largest", "biggest", "best", "top")
LOW = ("lowest", "least", "smallest", "fewest", "worst")
_TRIPLE = re.compile(r"^TRIPLE: \((.*), ([^,]+), (.*)\)$")
_FUNC = re.compile(r"Use the function '([^']+)'")


def _stem(word: str) -> str:
    return word[:4]


def question_stems(question: str) -> set[str]:
    words = re.findall(r"[a-z0-9]+", question.lower().replace("'s", ""))
    stems = {_stem(w) for w in words if len(w) >= 3}
    stems |= {_stem(SYNONYMS[w]) for w in words if w in SYNONYMS}
    return stems


def relation_score(name: str, stems: set[str]) -> int:
    tokens = [t for t in re.split(r"[_.]", name.lower()) if t and t not in ("get", "finance")]
    return sum(_stem(t) in stems for t in tokens)


def _norm(text: str) -> str:
    return " ".join(re.sub(r"[^\w\s]", " ", text.lower()).split())


def _number(text: str):
    try:
        return float(text)
    except ValueError:
        return None


class ToyModel:
    """Holds what the rules need to know about the KG (entity labels, relation names)."""

    def __init__(self, ontology: Ontology, entity_labels: Iterable[str], domain: str | None = None):
        self.ontology = ontology
        self.labels = sorted(set(entity_labels), key=lambda s: (-len(s), s))
        self.domain = domain or (ontology.domains[0] if ontology.domains else "other")

    @classmethod
    def for_backend(cls, backend: Backend, domain: str | None = None) -> ToyModel:
        labels = set(backend.entity_names())
        entities = getattr(backend, "entities", None)
        if callable(entities):
            labels |= {e.label for e in entities()}
        return cls(backend.ontology, labels, domain)

    def best_relations(self, question: str) -> set[str]:
        """Top-scoring relations, attributes first: entity relations are only the path to an answer."""
        stems = question_stems(question)
        rels = {r.name: r for r in self.ontology.relations()}
        for attribute in (True, False):
            scores = {n: relation_score(n, stems) for n, r in rels.items() if r.is_entity != attribute}
            top = max(scores.values(), default=0)
            if top > 0:
                return {n for n, s in scores.items() if s == top}
        return set()

    def mentions(self, question: str) -> list[str]:
        found, low = [], question.lower()
        for label in self.labels:
            if re.search(r"\b" + re.escape(label.lower()) + r"\b", low) and not any(label.lower() in f.lower() for f in found):
                found.append(label)
        found.sort(key=lambda s: low.find(s.lower()))
        return found

    # one method per template id

    def entity_domain(self, prompt: str, req: ChatRequest) -> str:
        question = req.bindings["QUERY"]
        names = self.mentions(question)
        if not names:
            return json.dumps({"domain": "other"})
        out = {"domain": self.domain, "main_entity": names[0]}
        if req.bindings.get("INSTRUCTIONS", "").strip():
            out["entities"] = names
        return json.dumps(out)

    def time_frame(self, prompt: str, req: ChatRequest) -> str:
        when, _ = parse_query_time(req.bindings["QUERY_TIME"])
        return f"The question has no explicit time cue, so the time frame is the query time.\n<{mdy(when.date())}>"

    def entity_pair(self, prompt: str, req: ChatRequest) -> str:
        m = re.search(r"\('([^']*)', '([^']*)'\)", req.bindings["PAIRS"])
        return f"('{m.group(1)}', '{m.group(2)}')" if m else "(No, No)"

    def tools(self, prompt: str, req: ChatRequest) -> str:
        question = req.bindings["QUESTION"]
        stems = question_stems(question)
        offered = _FUNC.findall(req.bindings["FUNCTIONS"])
        kept = [n for n in offered if relation_score(n, stems) > 0]
        calls = "".join(f"<function={n}>{{}}</function>" for n in kept)
        best = self.best_relations(question)
        if not kept:
            return "<CONTINUE>" if best - set(offered) else "I don't know"
        return calls + ("" if best & set(kept) else "<CONTINUE>")

    def boundary(self, prompt: str, req: ChatRequest) -> str:
        lines = [ln for ln in req.bindings["TRIPLES"].splitlines() if ln.strip()]
        if not lines:
            return "<NA>"
        seen = {m.group(2) for m in map(_TRIPLE.match, lines) if m}
        return "<YES>" if self.best_relations(req.bindings["QUESTION"]) & seen else "<NO>"

    def answer(self, question: str, content: str) -> str | None:
        triples = [m.groups() for m in map(_TRIPLE.match, content.splitlines()) if m]
        best = self.best_relations(question)
        candidates = [t for t in triples if t[1] in best]
        if not candidates:
            # API results carry field names ("marketCap"), not the function name
            stems = question_stems(question)
            declared = set(self.ontology.relation_names())
            fields = [t for t in triples if t[1] not in declared]
            scores = {t[1]: relation_score(re.sub(r"(?<=[a-z])(?=[A-Z])", "_", t[1]), stems) for t in fields}
            top = max(scores.values(), default=0)
            candidates = [t for t in fields if top > 0 and scores[t[1]] == top]
        if not candidates:
            return None
        low = question.lower()
        numeric = [(v, t) for t in candidates if (v := _number(t[2])) is not None]
        if numeric and any(w in low for w in HIGH):
            return max(numeric, key=lambda x: x[0])[1][0]
        if numeric and any(w in low for w in LOW):
            return min(numeric, key=lambda x: x[0])[1][0]
        return candidates[0][2]

    def summarize_cot(self, prompt: str, req: ChatRequest) -> str:
        ans = self.answer(req.bindings["QUESTION"], req.bindings["CONTENT"])
        if ans is None:
            return "The content has no relevant triple.\nAnswer: I don't know"
        return f"Step 1: find the triples relevant to the question.\nStep 2: compare them.\nAnswer: {ans}"

    def summarize_plain(self, prompt: str, req: ChatRequest) -> str:
        ans = self.answer(req.bindings["QUESTION"], req.bindings["CONTENT"])
        return "I don't know" if ans is None else ans

    @staticmethod
    def matches(gold: str, prediction: str) -> bool:
        g, p = _norm(gold), _norm(prediction)
        return bool(g) and (g == p or f" {g} " in f" {p} ")

    def judge_crag(self, prompt: str, req: ChatRequest) -> str:
        ok = self.matches(req.bindings["GOLD"], req.bindings["PREDICTION"])
        return json.dumps({"score": int(ok), "explanation": "match" if ok else "mismatch"})

    def judge_head2tail(self, prompt: str, req: ChatRequest) -> str:
        return "Yes" if self.matches(req.bindings["GOLD"], req.bindings["PREDICTION"]) else "No"

    def rules(self) -> dict:
        return {
            "planning.entity_domain": self.entity_domain,
            "planning.time_cot": self.time_frame,
            "planning.entity_pair": self.entity_pair,
            "filter.tools": self.tools,
            "filter.hop_boundary": self.boundary,
            "summarize.cot": self.summarize_cot,
            "summarize.plain": self.summarize_plain,
            "judge.crag": self.judge_crag,
            "sft.judge": self.judge_crag,
            "judge.head2tail": self.judge_head2tail,
        }


def toy_provider(backend: Backend, domain: str | None = None) -> RuleProvider:
    provider = RuleProvider(ToyModel.for_backend(backend, domain).rules())
    provider.name = "toy"
    return provider


class RandomProvider(Provider):
    """Seeded noise: picks a canned reply per template, for termination/robustness tests."""

    name = "random"

    def __init__(self, seed: int, relation_names: Iterable[str] = (), entity: str = "x"):
        self.rng = random.Random(seed)
        self.names = list(relation_names)
        self.entity = entity

    def generate(self, prompt, request, fp):
        r = self.rng
        tid = request.template_id
        if tid == "planning.entity_domain":
            return r.choice([json.dumps({"domain": "movie", "main_entity": self.entity}), "{}", "nonsense"])
        if tid == "planning.time_cot":
            return r.choice(["<01/02/2024>", "<01/02/2024 ~ future>", "no idea"])
        if tid == "filter.tools":
            picks = [n for n in self.names if r.random() < 0.4]
            tail = r.choice(["", "<CONTINUE>", ""])
            return "".join(f"<function={n}></function>" for n in picks) + tail or r.choice(["", "<CONTINUE>"])
        if tid == "filter.hop_boundary":
            return r.choice(["<YES>", "<NO>", "<NO>", "<NA>", "maybe"])
        return r.choice(["I don't know", "Answer: 42", ""])
