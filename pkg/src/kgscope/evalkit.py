"""LLM-judge verdicts and accuracy / hallucination / missing / truthfulness metrics."""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable
from dataclasses import dataclass, field

from .errors import KGScopeError, ScriptMissError
from .llm.gateway import Gateway
from .summarizer import Answer, is_missing_text

log = logging.getLogger(__name__)

SPLITS = ("head", "torso", "tail", "unsplit")
STYLES = {"crag": "judge.crag", "head2tail": "judge.head2tail"}
CLASSES = ("accurate", "missing", "hallucination")

_CRAG_SCORE = re.compile(r'"score"\s*:\s*"?([01])\b')
_YES_NO = re.compile(r"\b(yes|no)\b", flags=re.IGNORECASE)


def classify(answer: Answer | str) -> str:
    if isinstance(answer, Answer):
        if answer.is_missing or is_missing_text(answer.text):
            return "missing"
        return "needs_judge"
    return "missing" if is_missing_text(answer) else "needs_judge"


def parse_judge(text: str, style: str) -> int | None:
    if style == "crag":
        m = _CRAG_SCORE.search(text or "")
        return int(m.group(1)) if m else None
    m = _YES_NO.search(text or "")
    return None if m is None else int(m.group(1).lower() == "yes")


def judge(question: str, gold: str, prediction: str, style: str, gateway: Gateway,
          template_id: str | None = None) -> int:
    """0 or 1 from the critic; unparseable output twice in a row scores 0."""
    if style not in STYLES:
        raise ValueError(f"style must be one of {sorted(STYLES)}")
    tid = template_id or STYLES[style]
    for attempt in range(2):
        try:
            text = gateway.ask(tid, QUESTION=question, GOLD=gold, PREDICTION=prediction)
        except ScriptMissError:
            raise
        except KGScopeError as exc:
            log.warning("judge call failed: %s", exc)
            return 0
        score = parse_judge(text, style)
        if score is not None:
            return score
        log.info("unparseable judge output (attempt %d): %r", attempt + 1, text[:80])
    return 0


@dataclass(frozen=True)
class Verdict:
    question_id: str
    classification: str
    judge_score: int | None = None
    split: str = "unsplit"

    def __post_init__(self):
        if self.classification not in CLASSES:
            raise ValueError(f"bad classification {self.classification!r}")
        if self.classification == "missing" and self.judge_score is not None:
            raise ValueError("missing verdicts carry no judge score")
        if self.split not in SPLITS:
            raise ValueError(f"bad split {self.split!r}")

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id, "classification": self.classification,
            "judge_score": "n/a" if self.judge_score is None else self.judge_score, "split": self.split,
        }


def evaluate(question_id: str, question: str, gold: str, answer: Answer | str, style: str, gateway: Gateway,
             split: str = "unsplit") -> Verdict:
    split = split or "unsplit"
    if classify(answer) == "missing":
        return Verdict(question_id, "missing", None, split)
    text = answer.text if isinstance(answer, Answer) else answer
    score = judge(question, gold, text, style, gateway)
    return Verdict(question_id, "accurate" if score == 1 else "hallucination", score, split)


@dataclass(frozen=True)
class GroupMetrics:
    n: int
    accurate: int
    missing: int
    hallucination: int

    @property
    def A(self) -> float:
        return self.accurate / self.n

    @property
    def M(self) -> float:
        return self.missing / self.n

    @property
    def H(self) -> float:
        return self.hallucination / self.n

    @property
    def T(self) -> float:
        return self.A - self.H

    def to_dict(self) -> dict:
        return {"n": self.n, "A": self.A, "M": self.M, "H": self.H, "T": self.T}


@dataclass
class MetricsReport:
    groups: dict[str, GroupMetrics] = field(default_factory=dict)

    @property
    def overall(self) -> GroupMetrics | None:
        return self.groups.get("overall")

    def __getitem__(self, name) -> GroupMetrics:
        return self.groups[name]

    def to_text(self, title: str = "") -> str:
        lines = [title] if title else []
        lines.append(f"{'group':<10}{'n':>6}{'Accu.':>9}{'Hall.':>9}{'Miss.':>9}{'Truth.':>9}")
        for name, g in self.groups.items():
            lines.append(f"{name:<10}{g.n:>6}{g.A:>9.3f}{g.H:>9.3f}{g.M:>9.3f}{g.T:>9.3f}")
        return "\n".join(lines) + "\n"

    def to_records(self) -> list[dict]:
        return [{"group": name, **g.to_dict()} for name, g in self.groups.items()]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.to_records())


def _group(verdicts: list[Verdict]) -> GroupMetrics:
    counts = {c: 0 for c in CLASSES}
    for v in verdicts:
        counts[v.classification] += 1
    return GroupMetrics(len(verdicts), counts["accurate"], counts["missing"], counts["hallucination"])


def aggregate(verdicts: Iterable[Verdict]) -> MetricsReport:
    verdicts = list(verdicts)
    report = MetricsReport()
    for split in ("head", "torso", "tail"):
        chosen = [v for v in verdicts if v.split == split]
        if chosen:
            report.groups[split] = _group(chosen)
    if verdicts:
        report.groups["overall"] = _group(verdicts)
    return report


def from_counts(accurate: int, hallucination: int, missing: int, split: str = "unsplit") -> list[Verdict]:
    """Synthetic verdicts with the given class counts (handy for checking reported tables)."""
    out = []
    for cls, n, score in (("accurate", accurate, 1), ("hallucination", hallucination, 0), ("missing", missing, None)):
        out.extend(Verdict(f"{cls}-{i}", cls, score, split) for i in range(n))
    return out
