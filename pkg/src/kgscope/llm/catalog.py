"""Prompt template catalog. Placeholders are written ``<<NAME>>``."""

from __future__ import annotations

import os
import re
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

from ..errors import RenderError

PLACEHOLDER = re.compile(r"<<([A-Z][A-Z0-9_]*)>>")
TEMPLATE_DIR = Path(__file__).with_name("templates")

TEMPLATE_IDS = (
    "planning.entity_domain",
    "planning.time_cot",
    "planning.entity_pair",
    "filter.tools",
    "filter.hop_boundary",
    "summarize.cot",
    "summarize.plain",
    "judge.crag",
    "judge.head2tail",
    "sft.judge",
)

# the SFT correctness check reuses the evaluation critic
ALIASES = {"sft.judge": "judge.crag"}


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    skeleton: str

    @property
    def required_placeholders(self) -> frozenset[str]:
        return frozenset(PLACEHOLDER.findall(self.skeleton))

    def render(self, bindings: Mapping[str, object]) -> str:
        return render(self, bindings)


def render(template: PromptTemplate, bindings: Mapping[str, object]) -> str:
    """Substitute every placeholder in one pass; bound text is never re-expanded."""
    missing = sorted(template.required_placeholders - set(bindings))
    if missing:
        raise RenderError(f"template {template.id!r}: unbound placeholder(s) {', '.join(missing)}")
    return PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), template.skeleton)


class Catalog:
    """Templates loaded from a directory, one ``<id>.txt`` per template.

    A file named ``<id>@<provider>.txt`` is a provider-specific variant and
    wins over the base file when that provider asks for it.
    """

    def __init__(self, templates: Mapping[str, PromptTemplate], variants: Mapping[tuple[str, str], PromptTemplate] | None = None):
        self._templates = dict(templates)
        self._variants = dict(variants or {})

    @classmethod
    def load(cls, directory: str | os.PathLike = TEMPLATE_DIR) -> Catalog:
        templates, variants = {}, {}
        for path in sorted(Path(directory).glob("*.txt")):
            stem = path.stem
            text = path.read_text(encoding="utf-8").rstrip("\n")
            if "@" in stem:
                tid, provider = stem.split("@", 1)
                variants[(tid, provider)] = PromptTemplate(tid, text)
            else:
                templates[stem] = PromptTemplate(stem, text)
        return cls(templates, variants)

    def get(self, template_id: str, provider: str | None = None) -> PromptTemplate:
        tid = ALIASES.get(template_id, template_id)
        if provider is not None and (tid, provider) in self._variants:
            return self._variants[(tid, provider)]
        try:
            return self._templates[tid]
        except KeyError:
            raise RenderError(f"unknown template {template_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(set(self._templates) | set(ALIASES))

    def __contains__(self, template_id):
        return ALIASES.get(template_id, template_id) in self._templates


_default: Catalog | None = None


def default_catalog() -> Catalog:
    global _default
    if _default is None:
        _default = Catalog.load()
    return _default
