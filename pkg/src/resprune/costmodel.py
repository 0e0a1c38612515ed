"""Analytic prefill cost model and selection-overhead counts.

Per transformer layer, a length-N prefill is charged

    8*N*d^2   attention/output and QKV projections
    4*N^2*d   attention score and value mixing
    6*N*d*m   the MLP block (three d-by-m matmuls worth of MACs, doubled)

summed over layers, with N = visual_tokens + text_tokens for the full run
and N = budget + text_tokens after pruning.  Everything is exact Python
integer arithmetic; with every dimension set to 1 a single layer costs
exactly 18 FLOPs, which pins the constants in tests.

The KV-cache figure is a sequence-length ratio only (heads, head width and
cache dtype cancel); it ignores paging granularity and any runtime overhead
and is reported as informational.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class LlmShape:
    """Dimensions that fix the prefill cost of one model + workload."""

    hidden_dim: int
    mlp_dim: int
    layers: int
    visual_tokens: int
    text_tokens: int
    budget: int

    def __post_init__(self):
        for name in ("hidden_dim", "mlp_dim", "layers", "visual_tokens", "budget"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.text_tokens, int) or self.text_tokens < 0:
            raise ValueError(f"text_tokens must be a non-negative integer, got {self.text_tokens!r}")
        if self.budget > self.visual_tokens:
            raise ValueError(
                f"budget {self.budget} exceeds visual token count {self.visual_tokens}"
            )


def _layer_flops(n, d, m):
    return 8 * n * d * d + 4 * n * n * d + 6 * n * d * m


def prefill_flops(shape, pruned):
    """Total prefill FLOPs, exact int; ``pruned`` swaps T for the budget."""
    n = (shape.budget if pruned else shape.visual_tokens) + shape.text_tokens
    return shape.layers * _layer_flops(n, shape.hidden_dim, shape.mlp_dim)


def prefill_report(shape):
    """FLOP totals plus percentage reductions for one shape.

    ``kv_cache_reduction_percent`` is the informational sequence-length
    ratio described in the module docstring.
    """
    full = prefill_flops(shape, pruned=False)
    pruned = prefill_flops(shape, pruned=True)
    n_full = shape.visual_tokens + shape.text_tokens
    n_pruned = shape.budget + shape.text_tokens
    return {
        "full_flops": full,
        "pruned_flops": pruned,
        "reduction_percent": 100.0 * (full - pruned) / full,
        "kv_cache_reduction_percent": 100.0 * (n_full - n_pruned) / n_full,
    }


@dataclass(frozen=True)
class SelectionCost:
    """MAC counts of the selection stage itself, by phase."""

    relevance_macs: int
    greedy_macs: int
    basis_macs: int

    def total(self):
        return self.relevance_macs + self.greedy_macs + self.basis_macs


def selection_cost(visual_tokens, text_tokens, hidden_dim, budget):
    """Selection overhead: T*L*d relevance, k*T*d energy updates, k^2*d basis."""
    t, l, d, k = int(visual_tokens), int(text_tokens), int(hidden_dim), int(budget)
    if t < 1 or d < 1 or k < 1 or l < 0:
        raise ValueError("dimensions must be positive (text length may be zero)")
    if k > t:
        raise ValueError(f"budget {k} exceeds token count {t}")
    return SelectionCost(
        relevance_macs=t * l * d,
        greedy_macs=k * t * d,
        basis_macs=k * k * d,
    )


@dataclass(frozen=True)
class ModelPreset:
    """Nominal public dimensions for a named model family.

    ``visual_tokens`` is the family's typical full-resolution token count
    and is freely overridable; ``alpha`` is the gate exponent that works
    well for the family.
    """

    hidden_dim: int
    mlp_dim: int
    layers: int
    visual_tokens: int
    alpha: float

    def shape(self, budget, text_tokens=0, visual_tokens=None):
        return LlmShape(
            hidden_dim=self.hidden_dim,
            mlp_dim=self.mlp_dim,
            layers=self.layers,
            visual_tokens=self.visual_tokens if visual_tokens is None else visual_tokens,
            text_tokens=text_tokens,
            budget=budget,
        )


PRESETS = {
    "llava": ModelPreset(hidden_dim=4096, mlp_dim=11008, layers=32, visual_tokens=576, alpha=0.75),
    "llava-next": ModelPreset(
        hidden_dim=4096, mlp_dim=11008, layers=32, visual_tokens=2880, alpha=0.75
    ),
    "qwen": ModelPreset(hidden_dim=3584, mlp_dim=18944, layers=28, visual_tokens=10000, alpha=0.3),
}
