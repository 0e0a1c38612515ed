"""Strategies for picking the first retained token.

Every strategy resolves to a single index; ties break toward the lowest
index (argmax/argmin first-occurrence semantics).  The default is
score-driven when an external score vector is supplied, otherwise the
largest-norm token.
"""

import enum

import numpy as np


class SeedStrategy(enum.Enum):
    EXTERNAL_SCORE_ARGMAX = "scores"
    MAX_NORM = "norm"
    MAX_RELEVANCE = "relevance"
    NEAREST_TO_MEAN = "mean"
    GRID_CENTER = "center"


def default_strategy(scores=None):
    """Score argmax when scores are available, max-norm otherwise."""
    if scores is not None:
        return SeedStrategy.EXTERNAL_SCORE_ARGMAX
    return SeedStrategy.MAX_NORM


def select_seed(tokens, strategy, relevance=None, scores=None):
    """Resolve ``strategy`` to a token index.

    Args:
        tokens: :class:`~resprune.npyio.TokenMatrix`.
        strategy: member of :class:`SeedStrategy`.
        relevance: (T,) relevance vector, required by MAX_RELEVANCE.
        scores: :class:`~resprune.npyio.ScoreVector` or (T,) array,
            required by EXTERNAL_SCORE_ARGMAX.

    Returns:
        int index into the token rows.
    """
    data = tokens.data
    if strategy is SeedStrategy.MAX_NORM:
        sq_norms = np.einsum("ij,ij->i", data, data)
        return int(np.argmax(sq_norms))
    if strategy is SeedStrategy.EXTERNAL_SCORE_ARGMAX:
        if scores is None:
            raise ValueError("score-driven seeding needs an external score vector")
        values = scores.data if hasattr(scores, "data") else np.asarray(scores, dtype=np.float64)
        if values.shape != (tokens.count,):
            raise ValueError(
                f"score vector has {values.shape[0]} entries for {tokens.count} tokens"
            )
        return int(np.argmax(values))
    if strategy is SeedStrategy.MAX_RELEVANCE:
        if relevance is None:
            raise ValueError("relevance-driven seeding needs a relevance vector (text required)")
        values = np.asarray(relevance, dtype=np.float64)
        if values.shape != (tokens.count,):
            raise ValueError(
                f"relevance vector has {values.shape[0]} entries for {tokens.count} tokens"
            )
        return int(np.argmax(values))
    if strategy is SeedStrategy.NEAREST_TO_MEAN:
        mean = data.mean(axis=0)
        diff = data - mean
        distances = np.einsum("ij,ij->i", diff, diff)
        return int(np.argmin(distances))
    if strategy is SeedStrategy.GRID_CENTER:
        if tokens.grid is None:
            raise ValueError("grid-center seeding needs a token grid layout")
        rows, cols = tokens.grid
        return (rows // 2) * cols + cols // 2
    raise ValueError(f"unknown seed strategy {strategy!r}")
