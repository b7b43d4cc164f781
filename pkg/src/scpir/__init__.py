"""Private information retrieval from storage-constrained databases.

Each message is split into C(N,t) sub-messages of t^K bits, one per size-t
subset of databases, and every database stores the sub-messages whose index
set contains it. A K-stage XOR scheme then retrieves any message privately at
download cost 1 + 1/t + ... + 1/t^(K-1).
"""

from .analysis import (
    MemShareSpec,
    TradeoffPoint,
    baseline_extremes,
    composite_retrieval,
    improvement_report,
    memory_share,
    theoretical_cost,
    tradeoff_curve,
)
from .combinatorics import Rational, SubsetId, binom, enum_subsets, rank_subset, unrank_subset
from .errors import (
    EnumerationBoundError,
    IllegalQueryError,
    ParameterError,
    PlanInvariantError,
    VerificationError,
)
from .placement import DatabaseStore, Params, Placement, build_placement, init_databases, make_params, verify_storage
from .planner import (
    BitRef,
    QueryElement,
    QueryPlan,
    SecretPermutations,
    build_query_plan,
    db_view,
    sample_permutations,
    stage_counts,
)
from .privacy import exhaustive_audit, monte_carlo_audit, structural_audit
from .runtime import AnswerSet, RetrievalReport, answer_query, decode, random_messages, run_retrieval

__all__ = [
    "AnswerSet",
    "BitRef",
    "DatabaseStore",
    "EnumerationBoundError",
    "IllegalQueryError",
    "MemShareSpec",
    "ParameterError",
    "Params",
    "Placement",
    "PlanInvariantError",
    "QueryElement",
    "QueryPlan",
    "Rational",
    "RetrievalReport",
    "SecretPermutations",
    "SubsetId",
    "TradeoffPoint",
    "VerificationError",
    "answer_query",
    "baseline_extremes",
    "binom",
    "build_placement",
    "build_query_plan",
    "composite_retrieval",
    "db_view",
    "decode",
    "enum_subsets",
    "exhaustive_audit",
    "improvement_report",
    "init_databases",
    "make_params",
    "memory_share",
    "monte_carlo_audit",
    "rank_subset",
    "random_messages",
    "run_retrieval",
    "sample_permutations",
    "stage_counts",
    "structural_audit",
    "theoretical_cost",
    "tradeoff_curve",
    "unrank_subset",
    "verify_storage",
]
