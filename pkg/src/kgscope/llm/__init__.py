from .catalog import ALIASES, TEMPLATE_IDS, Catalog, PromptTemplate, default_catalog, render
from .gateway import (
    ChatRequest,
    ChatResponse,
    Gateway,
    HttpChatProvider,
    Provider,
    RecordingProvider,
    RuleProvider,
    ScriptedProvider,
    complete,
    fingerprint,
)
from .tags import BOUNDARY_TAGS, parse_tagged

__all__ = [
    "ALIASES", "TEMPLATE_IDS", "Catalog", "PromptTemplate", "default_catalog", "render",
    "ChatRequest", "ChatResponse", "Gateway", "HttpChatProvider", "Provider", "RecordingProvider",
    "RuleProvider", "ScriptedProvider", "complete", "fingerprint",
    "BOUNDARY_TAGS", "parse_tagged",
]
