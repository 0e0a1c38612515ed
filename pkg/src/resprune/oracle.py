"""Independent checks for the greedy selector.

Everything here recomputes quantities from scratch instead of trusting the
selector's incremental state: residual energies come from an explicit
rank-revealing projector (SVD of the selected rows), the reference greedy
loop re-derives every energy vector with that projector, and the brute
force search enumerates subsets outright.  Agreement between these routes
and the fast path is what the verification tests assert.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .npyio import TextMatrix, TokenMatrix
from .selector import ExhaustFallback, PruneConfig, SelectionResult, greedy_select
from .relevance import gate_weights, text_relevance, uniform_weights
from .seeding import default_strategy, select_seed

_RATIO_FLOOR = 1e-15


def _token_array(tokens):
    return tokens.data if isinstance(tokens, TokenMatrix) else np.asarray(tokens, np.float64)


def explicit_residuals(tokens, selected):
    """Residual energy of every token against the span of ``selected`` rows.

    Builds an orthonormal basis of the selected rows by SVD with a
    rank cutoff (singular values below ``s_max * max(shape) * eps`` are
    dropped), then evaluates ||v||^2 - ||B^T v||^2 per token, clamped at 0.

    Args:
        tokens: TokenMatrix or (T, d) array.
        selected: non-empty iterable of valid row indices (duplicates fine).

    Returns:
        (T,) float64 energy vector.
    """
    data = _token_array(tokens)
    idx = sorted(set(int(i) for i in selected))
    if not idx:
        raise ValueError("selected set must be non-empty")
    if idx[0] < 0 or idx[-1] >= data.shape[0]:
        raise ValueError(f"selected index out of range for {data.shape[0]} tokens")
    block = data[idx].T
    sq_norms = np.einsum("ij,ij->i", data, data)
    left, sing, _ = np.linalg.svd(block, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        return sq_norms.copy()
    cutoff = sing[0] * max(block.shape) * np.finfo(np.float64).eps
    basis = left[:, sing > cutoff]
    proj = data @ basis
    energy = sq_norms - np.einsum("ij,ij->i", proj, proj)
    np.maximum(energy, 0.0, out=energy)
    return energy


def greedy_reference(tokens, text=None, config=None, scores=None):
    """The greedy selection order, with every energy vector rebuilt by SVD.

    Shares the relevance / gate / seeding preprocessing with the fast
    selector but none of its incremental linear algebra; each step calls
    :func:`explicit_residuals` on the selected-so-far set.

    Returns:
        list of selected indices, in selection order.
    """
    if config is None:
        raise ValueError("a PruneConfig is required")
    total = tokens.count
    if config.budget > total:
        raise ValueError(f"budget {config.budget} exceeds token count {total}")
    text_rows = text.effective_rows() if text is not None else None
    if text_rows is not None and text_rows.shape[0] > 0:
        rel = text_relevance(tokens, text, config.formulation)
        weights = gate_weights(rel, config.gate)
    else:
        rel = None
        weights = uniform_weights(total)
    strategy = config.seed if config.seed is not None else default_strategy(scores)
    seed_index = select_seed(tokens, strategy, relevance=rel, scores=scores)

    data = tokens.data
    sq_norms = np.einsum("ij,ij->i", data, data)
    threshold = config.span_tol * float(sq_norms.max())

    chosen = [seed_index]
    taken = np.zeros(total, dtype=bool)
    taken[seed_index] = True
    while len(chosen) < config.budget:
        energy = explicit_residuals(tokens, chosen)
        open_energy = np.where(taken, -np.inf, energy)
        if open_energy.max() <= threshold:
            if config.exhaust_fallback is ExhaustFallback.BY_WEIGHT:
                ranking = weights
            else:
                ranking = sq_norms
            for idx in np.argsort(-ranking, kind="stable"):
                if len(chosen) >= config.budget:
                    break
                if not taken[idx]:
                    chosen.append(int(idx))
                    taken[idx] = True
            break
        pick = int(np.argmax(np.where(taken, -np.inf, energy * weights)))
        chosen.append(pick)
        taken[pick] = True
    return chosen


@dataclass(frozen=True)
class OracleReport:
    """Greedy-vs-exhaustive comparison for one instance."""

    greedy_error: float
    optimal_error: float
    optimal_subset: tuple
    greedy_subset: tuple
    ratio: float

    def __post_init__(self):
        if self.greedy_error < self.optimal_error - 1e-9:
            raise ValueError(
                "greedy error beat the exhaustive optimum "
                f"({self.greedy_error} < {self.optimal_error}); selection is broken"
            )


def brute_force_optimal(tokens, budget, greedy=None, max_subsets=1_000_000):
    """Exhaustive search over all size-``budget`` subsets.

    Enumerates ``itertools.combinations`` in lexicographic order and keeps
    the first subset attaining the minimum summed residual energy.  Refuses
    instances with more than ``max_subsets`` candidates.

    Args:
        tokens: TokenMatrix.
        budget: subset size.
        greedy: optional precomputed :class:`SelectionResult`; when absent
            a text-free default-config run is used.

    Returns:
        :class:`OracleReport`.
    """
    total = tokens.count
    n_subsets = math.comb(total, budget)
    if n_subsets > max_subsets:
        raise ValueError(
            f"{n_subsets} candidate subsets exceed the exhaustive-search limit {max_subsets}"
        )
    best_err = None
    best_subset = None
    for subset in itertools.combinations(range(total), budget):
        err = float(explicit_residuals(tokens, subset).sum())
        if best_err is None or err < best_err:
            best_err = err
            best_subset = subset
    if greedy is None:
        greedy = greedy_select(tokens, config=PruneConfig(budget=budget))
    if not isinstance(greedy, SelectionResult):
        raise TypeError("greedy must be a SelectionResult")
    return OracleReport(
        greedy_error=float(greedy.recon_error),
        optimal_error=best_err,
        optimal_subset=tuple(best_subset),
        greedy_subset=tuple(sorted(greedy.indices)),
        ratio=float(greedy.recon_error) / max(best_err, _RATIO_FLOOR),
    )


def synthetic_tokens(count, dim, seed=0, grid=None):
    """Standard-normal token matrix, float32 storage precision, seeded."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((count, dim)).astype(np.float32)
    return TokenMatrix(data, grid=grid)


def reference_instance():
    """The fixed probe pair used by the frozen regression tests.

    Generator: ``default_rng(42)``, standard normals, float32 cast, token
    block drawn before the text block.  Any reimplementation of this
    recipe reproduces the instance bit for bit.
    """
    rng = np.random.default_rng(42)
    visual = rng.standard_normal((12, 6)).astype(np.float32)
    text = rng.standard_normal((3, 6)).astype(np.float32)
    return TokenMatrix(visual, grid=(4, 3)), TextMatrix(text)
