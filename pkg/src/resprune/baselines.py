"""Reference selection baselines the greedy method is compared against.

All of them are deterministic given their arguments (the random baseline
through an explicit generator seed) and break ties toward the lowest index.
"""

import numpy as np

from .npyio import TokenMatrix
from .relevance import RelevanceFormulation, text_relevance


def _token_array(tokens):
    return tokens.data if isinstance(tokens, TokenMatrix) else np.asarray(tokens, np.float64)


def select_random(total, budget, seed):
    """Uniform sample without replacement, returned in ascending order."""
    if budget > total:
        raise ValueError(f"budget {budget} exceeds token count {total}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=budget, replace=False)
    return np.sort(picks).astype(np.int64)


def select_top_norm(tokens, budget):
    """The ``budget`` largest-norm tokens, in descending-norm order."""
    data = _token_array(tokens)
    if budget > data.shape[0]:
        raise ValueError(f"budget {budget} exceeds token count {data.shape[0]}")
    sq_norms = np.einsum("ij,ij->i", data, data)
    order = np.argsort(-sq_norms, kind="stable")
    return order[:budget].astype(np.int64)


def select_top_relevance(tokens, text, budget, formulation=RelevanceFormulation.MAX_COS):
    """The ``budget`` most text-relevant tokens, in descending-relevance order.

    Requires at least one effective text row; there is no text-free
    interpretation of this baseline.
    """
    if budget > tokens.count:
        raise ValueError(f"budget {budget} exceeds token count {tokens.count}")
    rel = text_relevance(tokens, text, formulation)
    order = np.argsort(-rel, kind="stable")
    return order[:budget].astype(np.int64)


def select_maxmin_diversity(tokens, budget, seed_index=0):
    """Farthest-point traversal under the distance ``1 - cosine``.

    Starts from ``seed_index``; each step adds the token whose minimum
    distance to the already-chosen set is largest.  Zero-norm rows have
    cosine 0 against everything, i.e. distance 1.

    Returns indices in selection order.
    """
    data = _token_array(tokens)
    total = data.shape[0]
    if budget > total:
        raise ValueError(f"budget {budget} exceeds token count {total}")
    if not (0 <= seed_index < total):
        raise ValueError(f"seed index {seed_index} out of range for {total} tokens")
    norms = np.sqrt(np.einsum("ij,ij->i", data, data))
    units = np.zeros_like(data)
    nonzero = norms > 0.0
    units[nonzero] = data[nonzero] / norms[nonzero, None]

    chosen = [int(seed_index)]
    taken = np.zeros(total, dtype=bool)
    taken[seed_index] = True
    min_dist = 1.0 - units @ units[seed_index]
    while len(chosen) < budget:
        pick = int(np.argmax(np.where(taken, -np.inf, min_dist)))
        chosen.append(pick)
        taken[pick] = True
        np.minimum(min_dist, 1.0 - units @ units[pick], out=min_dist)
    return np.array(chosen, dtype=np.int64)
