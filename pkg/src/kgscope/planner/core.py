"""Schema-guided retrieval planning.

The planner links the topic entity and domain, then walks the ontology one
hop at a time: offer the relations of the current frontier types, let the
filter keep or drop them and say whether the plan is already sufficient, and
stop on sufficiency, on an empty offer, or at ``max_hops``.
"""

from __future__ import annotations

import ast
import json
import logging
import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from datetime import date, timedelta

from ..errors import PlanningError, TagParseError
from ..kg.backend import Backend
from ..kg.model import UNTYPED, EntityRef, Ontology, SchemaRelation, Triple, render_triple
from ..llm.gateway import Gateway
from ..llm.tags import BOUNDARY_TAGS, parse_tagged
from ..timeutil import mdy, parse_query_time
from .ngram import ngram_candidate_pairs
from .similarity import rank_relations, remove_mentions

log = logging.getLogger(__name__)

FILTER_MODES = ("llm", "similarity", "none")
OTHER = "other"
CONTINUE = "<CONTINUE>"

# keys of the entity/domain JSON that name an entity, most specific first
ENTITY_KEYS = (
    "entities", "person", "movie_name", "market_identifier", "artist_name",
    "song_name", "team", "main_entity", "tournament",
)

MULTI_ENTITY_INSTRUCTION = (
    "\n\nIf the query mentions several entities (for example in a comparison), "
    "also include an `entities` key whose value is the list of ALL entity names."
)
JSON_REMINDER = "\n\nYour previous reply was not valid JSON with a recognizable entity. Reply with the JSON object only."
FUNCTION_REMINDER = "\n\n    - Your previous reply selected no function. Reply with at least one <function=...></function> call or <CONTINUE>."
TAG_REMINDER = "\n\nYour previous reply did not contain <NO>, <NA> or <YES>. Reply with exactly one of them."

_FUNCTION_CALL = re.compile(r"<function=([A-Za-z0-9_.\-]+)>")
_TIME_FRAME = re.compile(
    r"<\s*(\d{1,2}/\d{1,2}/\d{4})\s*(?:[~∼]\s*(\d{1,2}/\d{1,2}/\d{4}|future)\s*)?>",
    flags=re.IGNORECASE,
)


@dataclass(frozen=True)
class TimeFrame:
    start: date
    end: date | None  # None means open-ended into the future
    warning: bool = False

    @classmethod
    def point(cls, day: date, warning: bool = False) -> TimeFrame:
        return cls(day, day, warning)

    @property
    def is_point(self) -> bool:
        return self.end == self.start

    def __str__(self):
        if self.is_point:
            return f"<{mdy(self.start)}>"
        end = "future" if self.end is None else mdy(self.end)
        return f"<{mdy(self.start)} ~ {end}>"


@dataclass
class PlannerConfig:
    max_hops: int = 3
    filter_mode: str = "llm"
    top_k: int = 30
    candidate_pairs: int = 3
    multi_entity: bool = False
    extract_time: bool = True
    # similarity mode on triple stores: ask the hop-boundary question after each hop
    boundary_check: bool = True
    # "llm": entity/domain JSON prompt; "ngram": trigram candidate pairs + pair-selection prompt
    entity_linking: str = "llm"
    kg_name: str = "the knowledge graph"
    evidence_budget: int = 200
    embedder: object = None

    def __post_init__(self):
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"filter_mode must be one of {FILTER_MODES}")
        if self.top_k < 1 or self.candidate_pairs < 1:
            raise ValueError("top_k and candidate_pairs must be >= 1")
        if self.entity_linking not in ("llm", "ngram"):
            raise ValueError("entity_linking must be 'llm' or 'ngram'")


@dataclass(frozen=True)
class FilterDecision:
    kept: tuple[str, ...]
    dropped: tuple[str, ...]
    sufficient: bool
    link_failed: bool = False

    def partitions(self, offered: Sequence[str]) -> bool:
        kept, dropped = set(self.kept), set(self.dropped)
        return kept | dropped == set(offered) and not kept & dropped


@dataclass(frozen=True)
class RetrievalPlan:
    """Domain, topic entities, per-hop excluded relations and hop count."""

    domain: str
    topic_entities: tuple[EntityRef, ...]
    excluded: tuple[frozenset[str], ...]
    hops: int
    time_frame: TimeFrame | None = None
    offered: tuple[tuple[str, ...], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.topic_entities:
            raise ValueError("a plan needs at least one topic entity")
        if self.hops < 1:
            raise ValueError("a plan covers at least one hop")
        if len(self.excluded) != self.hops:
            raise ValueError(f"excluded has {len(self.excluded)} entries for {self.hops} hops")
        for i, names in enumerate(self.offered):
            if not self.excluded[i] <= set(names):
                raise ValueError(f"hop {i + 1} excludes relations that were never offered")

    def excluded_through(self, hop: int) -> frozenset[str]:
        """Every relation dropped at or before ``hop`` (dropped relations are never reconsidered)."""
        out: set[str] = set()
        for names in self.excluded[:hop]:
            out |= names
        return frozenset(out)

    def all_excluded(self) -> frozenset[str]:
        return self.excluded_through(self.hops)

    def summary(self) -> str:
        ents = ", ".join(e.label for e in self.topic_entities)
        excl = "; ".join("{" + ", ".join(sorted(x)) + "}" for x in self.excluded)
        tf = f", time={self.time_frame}" if self.time_frame else ""
        return f"(D={self.domain}, E=[{ents}], R_excluded=[{excl}], h={self.hops}{tf})"

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "topic_entities": [e.label for e in self.topic_entities],
            "excluded": [sorted(x) for x in self.excluded],
            "hops": self.hops,
            "time_frame": str(self.time_frame) if self.time_frame else None,
        }


def lookup_domain(ontology: Ontology, domain: str, entity_type: str) -> str | None:
    """Domain to read ``entity_type``'s relations from; "other" falls back to the type's first domain."""
    if ontology.has_type(entity_type, domain):
        return domain
    found = ontology.domains_for_type(entity_type)
    return found[0] if found else None


def offered_relations(ontology: Ontology, domain: str, types: Sequence[str], skip=frozenset()) -> list[SchemaRelation]:
    seen: set[str] = set()
    out = []
    for etype in types:
        d = lookup_domain(ontology, domain, etype)
        if d is None:
            continue
        for rel in ontology.relations_for(d, etype):
            if rel.name not in seen and rel.name not in skip:
                seen.add(rel.name)
                out.append(rel)
    return out


def _unique(seq):
    return list(dict.fromkeys(seq))


def _parse_json_object(text: str) -> dict | None:
    start, end = text.find("{"), text.rfind("}")
    if start < 0 or end <= start:
        return None
    try:
        obj = json.loads(text[start:end + 1])
    except ValueError:
        return None
    return obj if isinstance(obj, dict) else None


def _entity_names(obj: dict, multi: bool) -> list[str]:
    names = []
    for key in ENTITY_KEYS:
        value = obj.get(key)
        values = value if isinstance(value, list) else [value]
        names.extend(str(v).strip() for v in values if isinstance(v, (str, int)) and str(v).strip())
        if names and not multi:
            return names[:1]
    return _unique(names)


def _fallback_type(ontology: Ontology, domain: str) -> str:
    for etype in ontology.types(domain):
        if ontology.relations_for(domain, etype):
            return etype
    return UNTYPED


def link_entities(names: Sequence[str], domain: str, ontology: Ontology, backend: Backend | None) -> list[EntityRef]:
    out = []
    for name in names:
        ref = backend.resolve(name) if backend is not None else None
        if ref is None:
            ref = EntityRef(name, name, _fallback_type(ontology, domain))
            log.info("topic entity %r not found in the KG; typed as %s", name, ref.entity_type)
        if ref not in out:
            out.append(ref)
    return out


def extract_topic_and_domain(question: str, query_time: str, ontology: Ontology, gateway: Gateway,
                             backend: Backend | None = None, multi_entity: bool = False) -> tuple[list[EntityRef], str]:
    if not question.strip():
        raise ValueError("question must be non-empty")
    domains = ", ".join(f'"{d}"' for d in ontology.domains)
    instructions = MULTI_ENTITY_INSTRUCTION if multi_entity else ""
    for attempt in range(2):
        text = gateway.ask(
            "planning.entity_domain", QUERY=question, QUERY_TIME=query_time or "",
            DOMAINS=domains, INSTRUCTIONS=instructions + (JSON_REMINDER if attempt else ""),
        )
        obj = _parse_json_object(text)
        names = _entity_names(obj, multi_entity) if obj else []
        if names:
            domain = str(obj.get("domain", OTHER)).strip().lower()
            if domain not in ontology.domains:
                domain = OTHER
            return link_entities(names, domain, ontology, backend), domain
    raise PlanningError(f"could not parse topic entity/domain from {text[:120]!r}", reason="parse")


def link_by_candidate_pairs(question: str, ontology: Ontology, backend: Backend, gateway: Gateway,
                            k: int = 3) -> tuple[list[EntityRef], str]:
    """Trigram candidate pairs, then let the model pick one (or answer ``(No, No)``)."""
    pairs = ngram_candidate_pairs(question, backend.entity_names(), ontology.relation_names(), k)
    if not pairs:
        raise PlanningError("no candidate (entity, predicate) pairs", reason="entity_link")
    listing = "[" + ", ".join(repr(p.as_tuple()) for p in pairs) + "]"
    text = gateway.ask("planning.entity_pair", QUESTION=question, PAIRS=listing)
    m = re.search(r"\(([^()]*)\)", text)
    entity = None
    if m:
        try:
            chosen = ast.literal_eval(f"({m.group(1)})")
            entity = str(chosen[0]) if isinstance(chosen, tuple) and chosen else None
        except (ValueError, SyntaxError):
            entity = m.group(1).split(",")[0].strip().strip("'\"")
    if not entity or entity.lower() == "no":
        raise PlanningError("no (entity, predicate) pair selected", reason="entity_link")
    domain = ontology.domains[0] if len(ontology.domains) == 1 else OTHER
    return link_entities([entity], domain, ontology, backend), domain


def extract_time_frame(question: str, query_time: str, gateway: Gateway) -> TimeFrame:
    when, _ = parse_query_time(query_time)
    text = gateway.ask("planning.time_cot", QUERY=question, QUERY_TIME=query_time)
    return parse_time_frame(text, when.date())


def parse_time_frame(text: str, default: date) -> TimeFrame:
    from datetime import datetime

    m = _TIME_FRAME.search(text or "")
    if not m:
        log.warning("no time frame in model output; using the query time")
        return TimeFrame.point(default, warning=True)
    try:
        start = datetime.strptime(m.group(1), "%m/%d/%Y").date()
        if m.group(2) is None:
            return TimeFrame.point(start)
        if m.group(2).lower() == "future":
            return TimeFrame(start, None)
        return TimeFrame(start, datetime.strptime(m.group(2), "%m/%d/%Y").date())
    except ValueError:
        return TimeFrame.point(default, warning=True)


def relation_tool_spec(rel: SchemaRelation) -> str:
    target = f"entity ({rel.object_type})" if rel.is_entity else f"attribute ({rel.object_type})"
    description = f"{rel.description} [{rel.subject_type} -> {target}]"
    body = {
        "type": "function",
        "function": {
            "name": rel.name,
            "description": description,
            "parameters": {
                "type": "object",
                "properties": {"entity": {"type": "string", "description": f"The {rel.subject_type} interested."}},
                "required": ["entity"],
            },
        },
    }
    return f"Use the function '{rel.name}' to '{description}':\n{json.dumps(body)}"


def _tool_specs(offered: Sequence[SchemaRelation], backend: Backend | None) -> str:
    specs = []
    api_specs = getattr(backend, "tool_specs", None)
    for rel in offered:
        listed = api_specs([rel.name]) if api_specs else []
        specs.append(listed[0] if listed else relation_tool_spec(rel))
    return "\n\n".join(specs)


def _ask_boundary(question: str, lines: Sequence[str], gateway: Gateway, kg_name: str) -> str:
    for attempt in range(2):
        text = gateway.ask(
            "filter.hop_boundary", QUESTION=question, TRIPLES="\n".join(lines),
            KG_NAME=kg_name, REMINDER=TAG_REMINDER if attempt else "",
        )
        try:
            return parse_tagged(text, BOUNDARY_TAGS)
        except TagParseError:
            continue
    raise PlanningError("hop-boundary reply carried no <YES>/<NO>/<NA> tag", reason="parse")


def filter_relations(question: str, offered: Sequence[SchemaRelation], plan_so_far: str, gateway: Gateway | None,
                     config: PlannerConfig, backend: Backend | None = None,
                     topic_labels: Sequence[str] = (), query_time: str = "",
                     evidence: Callable[[Sequence[str]], list[str]] | None = None) -> FilterDecision:
    """Decide which offered relations to keep and whether the plan is sufficient.

    ``evidence(kept)`` returns the rendered triples retrieved so far; it is
    only called when a triple-store sufficiency check needs them.
    """
    if not offered:
        raise ValueError("offered must be non-empty")
    names = [r.name for r in offered]
    mode = config.filter_mode
    if mode == "none":
        return FilterDecision(tuple(names), (), False)

    api_style = backend is not None and backend.kind == "api"
    if mode == "similarity":
        query = remove_mentions(question, topic_labels)
        ranked = rank_relations(query, offered, config.top_k, config.embedder)
        kept = [r.name for r, _ in ranked]
        dropped = [n for n in names if n not in set(kept)]
        if api_style or not config.boundary_check or evidence is None:
            return FilterDecision(tuple(kept), tuple(dropped), True)
    else:
        entity = ", ".join(topic_labels) or "unknown"
        for attempt in range(2):
            text = gateway.ask(
                "filter.tools", QUESTION=question, ENTITY=entity, PLAN=plan_so_far,
                FUNCTIONS=_tool_specs(offered, backend), QUERY_TIME=query_time or "",
                REMINDER=FUNCTION_REMINDER if attempt else "",
            )
            called = set(_FUNCTION_CALL.findall(text))
            wants_more = CONTINUE in text
            if called or wants_more:
                break
        else:
            raise PlanningError("filter reply selected no relation and carried no continue marker", reason="parse")
        kept = [n for n in names if n in called]
        dropped = [n for n in names if n not in called]
        if api_style or evidence is None:
            return FilterDecision(tuple(kept), tuple(dropped), not wants_more)

    tag = _ask_boundary(question, evidence(kept), gateway, config.kg_name)
    return FilterDecision(tuple(kept), tuple(dropped), tag == "YES", link_failed=tag == "NA")


def build_plan(question: str, query_time: str, ontology: Ontology, backend: Backend, gateway: Gateway | None,
               config: PlannerConfig | None = None) -> RetrievalPlan:
    config = config or PlannerConfig()
    if config.entity_linking == "ngram":
        entities, domain = link_by_candidate_pairs(question, ontology, backend, gateway, config.candidate_pairs)
    else:
        entities, domain = extract_topic_and_domain(question, query_time, ontology, gateway, backend, config.multi_entity)
    time_frame = None
    if config.extract_time and query_time and gateway is not None:
        time_frame = extract_time_frame(question, query_time, gateway)

    labels = [e.label for e in entities]
    frontier_types = _unique(e.entity_type for e in entities)
    frontier_entities = list(entities)
    expanded: set[str] = set()
    seen_triples: list[Triple] = []
    excluded: list[frozenset[str]] = []
    offered_log: list[tuple[str, ...]] = []
    dropped_all: set[str] = set()
    hops = 0

    for hop in range(1, config.max_hops + 1):
        offered = offered_relations(ontology, domain, frontier_types, dropped_all)
        if not offered:
            if hop == 1:
                excluded.append(frozenset())
                offered_log.append(())
                hops = 1
            break

        hop_triples: list[Triple] = []

        def evidence(kept, hop=hop, hop_triples=hop_triples):
            todo = [e for e in frontier_entities if e.id not in expanded]
            if kept and todo:
                for etype in _unique(e.entity_type for e in todo):
                    group = [e for e in todo if e.entity_type == etype]
                    allowed = [r.name for r in offered_relations(ontology, domain, [etype], dropped_all)]
                    keep = [k for k in kept if k in allowed]
                    if keep:
                        hop_triples.extend(backend.fetch_neighbors(group, keep, hop))
            seen_triples.extend(hop_triples)
            return [render_triple(t) for t in seen_triples[: config.evidence_budget]]

        plan_text = _plan_text(domain, labels, excluded, hop - 1)
        decision = filter_relations(
            question, offered, plan_text, gateway, config, backend, labels, query_time,
            evidence if backend.kind == "triples" else None,
        )
        names = tuple(r.name for r in offered)
        excluded.append(frozenset(decision.dropped))
        offered_log.append(names)
        hops = hop
        if decision.link_failed:
            raise PlanningError(f"topic entity {labels} judged wrongly linked", reason="entity_link")
        dropped_all |= set(decision.dropped)
        if decision.sufficient:
            break
        kept = set(decision.kept)
        frontier_types = _unique(r.object_type for r in offered if r.name in kept and r.is_entity)
        if hop_triples:
            expanded.update(e.id for e in frontier_entities)
            frontier_entities = _unique(
                t.object for t in hop_triples if isinstance(t.object, EntityRef) and t.object.id not in expanded
            )

    return RetrievalPlan(domain, tuple(entities), tuple(excluded), hops, time_frame, tuple(offered_log))


def _plan_text(domain, labels, excluded, hops) -> str:
    excl = "; ".join("{" + ", ".join(sorted(x)) + "}" for x in excluded) or "none"
    return f"domain={domain}; topic entities={', '.join(labels)}; excluded relations per hop={excl}; hops so far={hops}"
