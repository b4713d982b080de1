"""Knowledge-graph question answering: schema-guided planning, multi-hop retrieval,
chain-of-thought summarization, SFT data generation and LLM-judge evaluation."""

from pathlib import Path

from .errors import KGScopeError, PlanningError, RetrievalError
from .evalkit import MetricsReport, Verdict, aggregate, classify, judge
from .kg import EntityRef, Literal, Ontology, SchemaRelation, Subgraph, Triple, load_fixture
from .llm import Gateway, RuleProvider, ScriptedProvider
from .pipeline import Pipeline, PipelineConfig, PipelineResult, answer_question
from .planner import PlannerConfig, RetrievalPlan, build_plan
from .retriever import LinearizedEvidence, execute_plan, linearize
from .sft import SftRecord, SftStats, build_sft_dataset, generate_sft_record
from .summarizer import Answer, extract_final, summarize

__version__ = "0.1.0"

# bundled example graphs and question files
DATA_DIR = Path(__file__).resolve().parent / "data"

__all__ = [
    "DATA_DIR",
    "KGScopeError", "PlanningError", "RetrievalError",
    "MetricsReport", "Verdict", "aggregate", "classify", "judge",
    "EntityRef", "Literal", "Ontology", "SchemaRelation", "Subgraph", "Triple", "load_fixture",
    "Gateway", "RuleProvider", "ScriptedProvider",
    "Pipeline", "PipelineConfig", "PipelineResult", "answer_question",
    "PlannerConfig", "RetrievalPlan", "build_plan",
    "LinearizedEvidence", "execute_plan", "linearize",
    "SftRecord", "SftStats", "build_sft_dataset", "generate_sft_record",
    "Answer", "extract_final", "summarize",
]
