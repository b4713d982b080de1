"""Function-call KG backend: a registry of API functions whose results become triples.

The registry is a JSON document::

    {
      "types": [["finance", "ticker"]],
      "functions": [
        {"name": "finance_get_market_capitalization",
         "description": "Return the market capitalization of a ticker.",
         "domain": "finance", "subject_type": "ticker", "subject_arg": "ticker_name",
         "object": "attr:number",
         "parameters": {"type": "object",
                        "properties": {"ticker_name": {"type": "string", "description": "..."}},
                        "required": ["ticker_name"]}}
      ],
      "responses": {"finance_get_market_capitalization": {"XYZ": {"marketCap": 1.2e9}}}
    }

``entity_fields`` on a function maps result fields to entity types, which is
how API results feed the next hop. ``responses`` makes the registry a mock
KG; a live deployment passes ``handlers`` (callables) instead.
"""

from __future__ import annotations

import difflib
import json
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ArgumentError, RegistryError, RetrievalError, ValidationError
from .backend import Backend, FetchResult
from .model import UNTYPED, EntityRef, Literal, Ontology, SchemaRelation, Triple, canonical_json

_SCALARS = (str, int, float, bool)


@dataclass(frozen=True)
class ApiFunction:
    name: str
    description: str
    domain: str
    subject_type: str
    subject_arg: str | None
    object_kind: str
    object_type: str
    parameters: dict = field(default_factory=dict)
    entity_fields: dict = field(default_factory=dict)

    @property
    def required(self) -> list[str]:
        return list(self.parameters.get("required", []))

    def tool_spec(self) -> str:
        """One function entry in the tool-catalog style used by filtering prompts."""
        body = {
            "type": "function",
            "function": {"name": self.name, "description": self.description, "parameters": self.parameters},
        }
        return f"Use the function '{self.name}' to '{self.description}':\n{json.dumps(body)}"

    def relation(self) -> SchemaRelation:
        return SchemaRelation(self.name, self.subject_type, self.object_kind, self.object_type, self.description, self.domain)


def _number_text(v) -> str:
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _literal(v) -> Literal:
    if isinstance(v, bool):
        return Literal("true" if v else "false", "text")
    if isinstance(v, (int, float)):
        return Literal(_number_text(v), "number")
    if isinstance(v, (dict, list)):
        return Literal.record(v)
    return Literal(str(v), "text")


def flatten_result(subject: EntityRef, result, fn: ApiFunction) -> list[tuple[str, EntityRef | Literal]]:
    """Turn a structured API result into (predicate, object) pairs.

    Top-level fields become predicates; nested records flatten one level into
    ``field.subfield`` and anything deeper is kept as a structured-record literal.
    """
    if result is None:
        return []
    if not isinstance(result, dict):
        items = result if isinstance(result, list) else [result]
        return [(fn.name, _literal(item)) for item in items if item is not None]
    pairs = []
    for key, value in result.items():
        if value is None:
            continue
        if key in fn.entity_fields:
            names = value if isinstance(value, list) else [value]
            pairs.extend((key, EntityRef(str(n), "", fn.entity_fields[key])) for n in names if n is not None)
        elif isinstance(value, dict):
            for sub, inner in value.items():
                if inner is not None:
                    pairs.append((f"{key}.{sub}", _literal(inner)))
        elif isinstance(value, list):
            pairs.extend((key, _literal(item)) for item in value if item is not None)
        else:
            pairs.append((key, _literal(value)))
    return pairs


class ApiBackend(Backend):
    kind = "api"

    def __init__(self, functions, types=(), responses: Mapping | None = None,
                 handlers: Mapping[str, Callable] | None = None, name: str = "api"):
        self.name = name
        self.functions: dict[str, ApiFunction] = {}
        for fn in functions:
            if fn.name in self.functions:
                raise ValidationError(f"duplicate function {fn.name!r}")
            self.functions[fn.name] = fn
        declared_types = list(types)
        for fn in self.functions.values():
            declared_types.append((fn.domain, fn.subject_type))
        self.ontology = Ontology((fn.relation() for fn in self.functions.values() if fn.subject_type != UNTYPED),
                                 declared_types)
        self._responses = responses or {}
        self._handlers = dict(handlers or {})
        known = {}
        for fname, by_subject in self._responses.items():
            fn = self.functions.get(fname)
            if fn is None or fn.subject_type == UNTYPED:
                continue
            for sid in by_subject:
                if sid != "*":
                    known.setdefault(sid, EntityRef(sid, "", fn.subject_type))
        self._known = known

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> ApiBackend:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise RegistryError(f"cannot load API registry {path}: {exc}") from exc
        return cls.from_dict(doc, name=path.stem)

    @classmethod
    def from_dict(cls, doc: dict, name: str = "api") -> ApiBackend:
        functions = []
        for entry in doc.get("functions", []):
            kind, _, otype = entry.get("object", "attr:structured-record").partition(":")
            functions.append(ApiFunction(
                name=entry["name"],
                description=entry["description"],
                domain=entry.get("domain", "other"),
                subject_type=entry.get("subject_type", UNTYPED),
                subject_arg=entry.get("subject_arg"),
                object_kind="entity" if kind == "entity" else "attribute",
                object_type=otype,
                parameters=entry.get("parameters", {"type": "object", "properties": {}, "required": []}),
                entity_fields=entry.get("entity_fields", {}),
            ))
        types = [tuple(t) for t in doc.get("types", [])]
        return cls(functions, types, doc.get("responses", {}), name=name)

    def dispatch(self, function_name: str, args: Mapping) -> list[Triple]:
        fn = self.functions.get(function_name)
        if fn is None:
            near = difflib.get_close_matches(function_name, list(self.functions), n=1, cutoff=0.0)
            hint = f"; did you mean {near[0]!r}?" if near else ""
            raise RegistryError(f"unknown function {function_name!r}{hint}")
        missing = [a for a in fn.required if a not in args]
        if missing:
            raise ArgumentError(f"{function_name}: missing required argument(s) {', '.join(missing)}")
        # extra arguments are deliberately ignored
        call_args = {k: args[k] for k in fn.parameters.get("properties", {}) if k in args}
        subject_id = str(call_args[fn.subject_arg]) if fn.subject_arg and fn.subject_arg in call_args else fn.name
        subject = self._known.get(subject_id) or EntityRef(
            subject_id, "", fn.subject_type if fn.subject_arg else UNTYPED)
        result = self._call(fn, call_args, subject_id)
        return [
            Triple(subject, pred, obj, 1, f"{self.name}:{fn.name}", fn.name)
            for pred, obj in flatten_result(subject, result, fn)
        ]

    def _call(self, fn: ApiFunction, args: dict, subject_id: str):
        if fn.name in self._handlers:
            return self._handlers[fn.name](**args)
        table = self._responses.get(fn.name, {})
        result = table.get(subject_id, table.get("*"))
        if isinstance(result, dict) and "__error__" in result:
            raise RetrievalError(f"{fn.name}({subject_id}): {result['__error__']}", retryable=True)
        return result

    def fetch_neighbors(self, entities, keep, hop):
        out = FetchResult()
        for entity in entities:
            for name in keep:
                fn = self.functions.get(name)
                if fn is None or fn.subject_type != entity.entity_type or not fn.subject_arg:
                    continue
                try:
                    triples = self.dispatch(name, {fn.subject_arg: entity.id})
                except RetrievalError as exc:
                    out.fail(entity.id, str(exc))
                    continue
                out.extend(t.with_hop(hop) for t in triples)
        return out

    def resolve(self, name: str) -> EntityRef | None:
        if name in self._known:
            return self._known[name]
        lowered = {k.lower(): v for k, v in self._known.items()}
        return lowered.get(name.lower())

    def entity_names(self) -> list[str]:
        return list(self._known)

    def tool_specs(self, names) -> list[str]:
        return [self.functions[n].tool_spec() for n in names if n in self.functions]


def api_dispatch(backend: ApiBackend, function_name: str, args: Mapping) -> list[Triple]:
    return backend.dispatch(function_name, args)
