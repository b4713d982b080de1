"""SFT corpus generation: keep correct CoT answers, substitute gold for wrong ones."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import KGScopeError
from .evalkit import judge
from .llm.gateway import Gateway
from .retriever import LinearizedEvidence
from .summarizer import summarize

log = logging.getLogger(__name__)

KEPT = "kept_cot"
SUBSTITUTED = "gold_substituted"


@dataclass(frozen=True)
class SftRecord:
    question: str
    query_time: str
    evidence: tuple[str, ...]
    prompt_kind: str
    prompt: str
    target: str
    branch: str
    judge_score: int
    question_id: str = ""

    def __post_init__(self):
        kept = self.branch == KEPT and self.judge_score == 1 and self.prompt_kind == "cot"
        subst = self.branch == SUBSTITUTED and self.judge_score == 0 and self.prompt_kind == "plain"
        if not (kept or subst):
            raise ValueError(f"inconsistent SFT record: {self.branch}/{self.prompt_kind}/{self.judge_score}")

    def to_json(self) -> str:
        doc = {"prompt": self.prompt, "completion": self.target, "branch": self.branch, "question_id": self.question_id}
        return json.dumps(doc, ensure_ascii=False)


@dataclass(frozen=True)
class SftStats:
    total: int
    kept_cot: int
    gold_substituted: int
    skipped: int = 0

    @property
    def cot_proportion(self) -> float:
        return self.kept_cot / self.total if self.total else 0.0

    @property
    def empty(self) -> bool:
        return self.total == 0

    def to_dict(self) -> dict:
        return {**asdict(self), "cot_proportion": self.cot_proportion, "empty": self.empty}


def generate_sft_record(question: str, query_time: str, evidence: LinearizedEvidence, gold: str, gateway: Gateway,
                        question_id: str = "") -> SftRecord | None:
    """One training example, or None when generation failed (the question is skipped)."""
    if not gold or not gold.strip():
        raise ValueError("gold answer must be non-empty")
    bindings = dict(QUESTION=question, QUERY_TIME=query_time or "", CONTENT="\n".join(evidence.lines))
    cot_prompt = gateway.render(gateway.request("summarize.cot", **bindings))
    answer = summarize(question, evidence, query_time, "cot", gateway, strict_evidence=False)
    if answer.error is not None:
        log.warning("skipping %s: generation failed (%s)", question_id or question[:40], answer.error)
        return None
    score = 0 if answer.is_missing else judge(question, gold, answer.text, "crag", gateway, "sft.judge")
    if score == 1:
        return SftRecord(question, query_time, evidence.lines, "cot", cot_prompt, answer.reasoning or answer.text,
                         KEPT, 1, question_id)
    plain_prompt = gateway.render(gateway.request("summarize.plain", **bindings))
    return SftRecord(question, query_time, evidence.lines, "plain", plain_prompt, gold, SUBSTITUTED, 0, question_id)


def build_sft_dataset(items: Sequence[dict], evidence_for: Callable[[dict], LinearizedEvidence], gateway: Gateway,
                      out_path: str | os.PathLike, workers: int = 4) -> SftStats:
    """Write the corpus to ``out_path`` and stats to ``<out_path>.stats.json``.

    ``items`` are question records with ``id``, ``query``, ``query_time`` and
    ``gold``. Output order follows input order whatever the worker count.
    """
    for it in items:
        if not str(it.get("gold", "")).strip():
            raise ValueError(f"training question {it.get('id')!r} has no gold answer")

    def work(it):
        try:
            ev = evidence_for(it)
        except KGScopeError as exc:
            log.warning("skipping %s: %s", it.get("id"), exc)
            return None
        return generate_sft_record(it["query"], it.get("query_time", ""), ev, str(it["gold"]), gateway, str(it.get("id", "")))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        records = list(pool.map(work, items))
    emitted = [r for r in records if r is not None]
    kept = sum(r.branch == KEPT for r in emitted)
    stats = SftStats(len(emitted), kept, len(emitted) - kept, len(records) - len(emitted))

    out_path = Path(out_path)
    _atomic_write(out_path, "".join(r.to_json() + "\n" for r in emitted))
    _atomic_write(out_path.with_name(out_path.name + ".stats.json"), json.dumps(stats.to_dict(), indent=2) + "\n")
    return stats


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
