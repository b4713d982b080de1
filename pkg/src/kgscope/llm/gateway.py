"""Chat-completion requests, providers, and the gateway that renders and logs them."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from ..errors import KGScopeError, ScriptMissError, TransportError
from .catalog import Catalog, default_catalog

log = logging.getLogger(__name__)

ENV_ENDPOINT = "KGSCOPE_LLM_ENDPOINT"
ENV_MODEL = "KGSCOPE_LLM_MODEL"
ENV_TOKEN = "KGSCOPE_LLM_TOKEN"
ENV_REQUEST_LOG = "KGSCOPE_REQUEST_LOG"


@dataclass(frozen=True)
class ChatRequest:
    template_id: str
    bindings: Mapping[str, str] = field(default_factory=dict)
    temperature: float = 0.0
    max_output: int = 512


@dataclass(frozen=True)
class ChatResponse:
    text: str
    provider: str
    fingerprint: str
    template_id: str = ""


def fingerprint(template_id: str, rendered: str) -> str:
    return hashlib.sha256(f"{template_id}\x00{rendered}".encode("utf-8")).hexdigest()


class Provider:
    name = "provider"

    def generate(self, prompt: str, request: ChatRequest, fp: str) -> str:
        raise NotImplementedError


class ScriptedProvider(Provider):
    """Replays canned completions keyed by prompt fingerprint."""

    name = "scripted"

    def __init__(self, script: Mapping[str, str], strict: bool = True, fallback: str = "I don't know"):
        self._script = dict(script)
        self.strict = strict
        self.fallback = fallback
        self.misses: list[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | os.PathLike, strict: bool = True, fallback: str = "I don't know") -> ScriptedProvider:
        script = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    script[rec["fingerprint"]] = rec["response"]
        return cls(script, strict, fallback)

    def __len__(self):
        return len(self._script)

    def generate(self, prompt, request, fp):
        if fp in self._script:
            return self._script[fp]
        if self.strict:
            raise ScriptMissError(fp, request.template_id)
        with self._lock:
            self.misses.append(fp)
        return self.fallback


class RuleProvider(Provider):
    """Deterministic mock: one callable per template id, ``rule(prompt, request) -> text``."""

    name = "rules"

    def __init__(self, rules: Mapping[str, Callable[[str, ChatRequest], str]], default: str | None = None):
        self.rules = dict(rules)
        self.default = default

    def generate(self, prompt, request, fp):
        rule = self.rules.get(request.template_id)
        if rule is None:
            if self.default is None:
                raise KGScopeError(f"no rule for template {request.template_id!r}")
            return self.default
        return rule(prompt, request)


class RecordingProvider(Provider):
    """Wraps another provider and keeps every answer, so a run can be replayed strictly."""

    def __init__(self, inner: Provider):
        self.inner = inner
        self.name = inner.name
        self.records: dict[str, tuple[str, str]] = {}
        self._lock = threading.Lock()

    def generate(self, prompt, request, fp):
        text = self.inner.generate(prompt, request, fp)
        with self._lock:
            self.records[fp] = (request.template_id, text)
        return text

    def script(self) -> dict[str, str]:
        return {fp: text for fp, (_, text) in self.records.items()}

    def dump(self, path: str | os.PathLike):
        with open(path, "w", encoding="utf-8") as fh:
            for fp in sorted(self.records):
                tid, text = self.records[fp]
                fh.write(json.dumps({"fingerprint": fp, "template_id": tid, "response": text}, ensure_ascii=False) + "\n")


class HttpChatProvider(Provider):
    """OpenAI-compatible ``/chat/completions`` endpoint, single-turn, non-streaming."""

    name = "http"

    def __init__(self, endpoint: str, model: str, token: str | None = None, timeout: float = 120.0,
                 client: httpx.Client | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.token = token
        self._client = client or httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls) -> HttpChatProvider:
        endpoint = os.environ.get(ENV_ENDPOINT)
        model = os.environ.get(ENV_MODEL)
        if not endpoint or not model:
            raise KGScopeError(f"set {ENV_ENDPOINT} and {ENV_MODEL} to use the HTTP provider")
        return cls(endpoint, model, os.environ.get(ENV_TOKEN))

    def generate(self, prompt, request, fp):
        url = self.endpoint if self.endpoint.endswith("/chat/completions") else self.endpoint + "/chat/completions"
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output,
        }
        try:
            resp = self._client.post(url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"{url}: {exc}") from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransportError(f"{url}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise KGScopeError(f"{url}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError) as exc:
            raise TransportError(f"{url}: malformed response body") from exc


class Gateway:
    """Renders a request from the catalog, calls the provider, and logs the exchange.

    Transport failures get exactly one retry. Malformed *content* is returned
    as-is; deciding what to do with it is the caller's business.
    """

    def __init__(self, provider: Provider, catalog: Catalog | None = None,
                 request_log: str | os.PathLike | None = None, variant: str | None = None,
                 temperature: float = 0.0):
        self.provider = provider
        self.temperature = temperature
        self.catalog = catalog or default_catalog()
        self.variant = variant
        if request_log is None:
            request_log = os.environ.get(ENV_REQUEST_LOG) or None
        self.request_log = Path(request_log) if request_log else None
        self.log: list[dict] = []
        self._lock = threading.Lock()

    def render(self, request: ChatRequest) -> str:
        return self.catalog.get(request.template_id, self.variant).render(request.bindings)

    def fingerprint(self, request: ChatRequest) -> str:
        return fingerprint(request.template_id, self.render(request))

    def complete(self, request: ChatRequest) -> ChatResponse:
        prompt = self.render(request)
        fp = fingerprint(request.template_id, prompt)
        start = time.perf_counter()
        try:
            text = self.provider.generate(prompt, request, fp)
        except TransportError as exc:
            log.warning("transport failure on %s, retrying once: %s", request.template_id, exc)
            text = self.provider.generate(prompt, request, fp)
        latency = time.perf_counter() - start
        record = {
            "fingerprint": fp,
            "template_id": request.template_id,
            "bytes": len(prompt.encode("utf-8")),
            "latency": round(latency, 6),
            "temperature": request.temperature,
        }
        with self._lock:
            self.log.append({**record, "prompt": prompt})
            if self.request_log is not None:
                with open(self.request_log, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record) + "\n")
        return ChatResponse(text, self.provider.name, fp, request.template_id)

    def request(self, template_id: str, **bindings) -> ChatRequest:
        return ChatRequest(template_id, {k: str(v) for k, v in bindings.items()}, self.temperature)

    def ask(self, template_id: str, **bindings) -> str:
        return self.complete(self.request(template_id, **bindings)).text


def complete(provider: Provider, request: ChatRequest, catalog: Catalog | None = None) -> ChatResponse:
    return Gateway(provider, catalog).complete(request)
