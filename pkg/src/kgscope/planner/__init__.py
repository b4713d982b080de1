from .core import (
    FILTER_MODES,
    FilterDecision,
    PlannerConfig,
    RetrievalPlan,
    TimeFrame,
    build_plan,
    extract_time_frame,
    extract_topic_and_domain,
    filter_relations,
    link_by_candidate_pairs,
    lookup_domain,
    offered_relations,
    parse_time_frame,
    relation_tool_spec,
)
from .ngram import CandidatePair, ngram_candidate_pairs, trigram_similarity
from .similarity import HashingEmbedder, rank_relations, remove_mentions

__all__ = [
    "FILTER_MODES", "FilterDecision", "PlannerConfig", "RetrievalPlan", "TimeFrame",
    "build_plan", "extract_time_frame", "extract_topic_and_domain", "filter_relations",
    "link_by_candidate_pairs", "lookup_domain", "offered_relations", "parse_time_frame",
    "relation_tool_spec",
    "CandidatePair", "ngram_candidate_pairs", "trigram_similarity",
    "HashingEmbedder", "rank_relations", "remove_mentions",
]
