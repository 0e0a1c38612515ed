"""Greedy subspace selection of visual token subsets.

Pick the k of T token embeddings whose span reconstructs the full set
best, with an optional text-relevance gate steering the greedy order.
"""

from .npyio import (
    FormatError,
    ScoreVector,
    TextMatrix,
    TokenMatrix,
    load_keep_mask,
    load_result,
    load_score_vector,
    load_text_matrix,
    load_token_matrix,
    read_npy,
    result_to_json,
    save_result,
    write_npy,
)
from .relevance import (
    GateConfig,
    RelevanceFormulation,
    clean_text_tokens,
    default_patterns,
    gate_weights,
    text_relevance,
    uniform_weights,
)
from .seeding import SeedStrategy, default_strategy, select_seed
from .selector import (
    ExhaustFallback,
    GreedyTrace,
    OrthoBasis,
    PruneConfig,
    ResidualState,
    SelectionResult,
    greedy_select,
    greedy_select_traced,
    update_energies,
)
from .oracle import (
    OracleReport,
    brute_force_optimal,
    explicit_residuals,
    greedy_reference,
    reference_instance,
    synthetic_tokens,
)
from .baselines import (
    select_maxmin_diversity,
    select_random,
    select_top_norm,
    select_top_relevance,
)
from .costmodel import (
    LlmShape,
    ModelPreset,
    PRESETS,
    SelectionCost,
    prefill_flops,
    prefill_report,
    selection_cost,
)

__version__ = "0.1.0"

__all__ = [
    "FormatError",
    "ScoreVector",
    "TextMatrix",
    "TokenMatrix",
    "load_keep_mask",
    "load_result",
    "load_score_vector",
    "load_text_matrix",
    "load_token_matrix",
    "read_npy",
    "result_to_json",
    "save_result",
    "write_npy",
    "GateConfig",
    "RelevanceFormulation",
    "clean_text_tokens",
    "default_patterns",
    "gate_weights",
    "text_relevance",
    "uniform_weights",
    "SeedStrategy",
    "default_strategy",
    "select_seed",
    "ExhaustFallback",
    "GreedyTrace",
    "OrthoBasis",
    "PruneConfig",
    "ResidualState",
    "SelectionResult",
    "greedy_select",
    "greedy_select_traced",
    "update_energies",
    "OracleReport",
    "brute_force_optimal",
    "explicit_residuals",
    "greedy_reference",
    "reference_instance",
    "synthetic_tokens",
    "select_maxmin_diversity",
    "select_random",
    "select_top_norm",
    "select_top_relevance",
    "LlmShape",
    "ModelPreset",
    "PRESETS",
    "SelectionCost",
    "prefill_flops",
    "prefill_report",
    "selection_cost",
    "__version__",
]
