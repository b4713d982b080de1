"""Plan, retrieve and summarize a single question."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .errors import KGScopeError, PlanningError, RetrievalError
from .kg.backend import Backend
from .kg.model import Subgraph
from .llm.gateway import Gateway
from .planner.core import PlannerConfig, RetrievalPlan, build_plan
from .retriever import DEFAULT_BUDGET, LinearizedEvidence, execute_plan, linearize
from .summarizer import Answer, summarize

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    mode: str = "cot"
    strict_evidence: bool = True
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.mode not in ("cot", "plain"):
            raise ValueError("mode must be cot or plain")


@dataclass
class PipelineResult:
    answer: Answer
    plan: RetrievalPlan | None
    subgraph: Subgraph | None
    evidence: LinearizedEvidence | None
    seconds: float = 0.0
    reason: str = ""

    @property
    def triple_count(self) -> int:
        return len(self.subgraph) if self.subgraph is not None else 0


class Pipeline:
    def __init__(self, backend: Backend, gateway: Gateway, config: PipelineConfig | None = None):
        self.backend = backend
        self.gateway = gateway
        self.config = config or PipelineConfig()

    def evidence(self, question: str, query_time: str = "") -> tuple[RetrievalPlan, Subgraph, LinearizedEvidence]:
        plan = build_plan(question, query_time, self.backend.ontology, self.backend, self.gateway, self.config.planner)
        subgraph = execute_plan(plan, self.backend)
        return plan, subgraph, linearize(subgraph, self.backend.ontology, self.config.budget)

    def answer(self, question: str, query_time: str = "") -> PipelineResult:
        """Never raises for per-question faults; they come back as missing answers with a reason.

        Script misses (``ScriptMissError``) and other infrastructure errors do
        propagate from planning, since silently answering would hide them.
        """
        start = time.perf_counter()
        mode = self.config.mode
        plan = subgraph = evidence = None
        try:
            plan, subgraph, evidence = self.evidence(question, query_time)
        except PlanningError as exc:
            log.info("planning failed (%s): %s", exc.reason, exc)
            return PipelineResult(Answer.missing(mode, str(exc)), None, None, None,
                                  time.perf_counter() - start, f"planning:{exc.reason}")
        except RetrievalError as exc:
            return PipelineResult(Answer.missing(mode, str(exc)), plan, None, None,
                                  time.perf_counter() - start, "retrieval")
        answer = summarize(question, evidence, query_time, mode, self.gateway, self.config.strict_evidence)
        reason = "no evidence" if not evidence.lines and answer.is_missing else ""
        return PipelineResult(answer, plan, subgraph, evidence, time.perf_counter() - start, reason)


def answer_question(question: str, query_time: str, backend: Backend, gateway: Gateway,
                    config: PipelineConfig | None = None) -> PipelineResult:
    return Pipeline(backend, gateway, config).answer(question, query_time)


__all__ = ["Pipeline", "PipelineConfig", "PipelineResult", "answer_question", "KGScopeError"]
