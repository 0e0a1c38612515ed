"""Text-conditioned relevance scores and the gate weights derived from them.

Relevance maps every visual token to a value in [0, 1] measuring how well it
aligns with the text-side embeddings.  Cosines are clamped at zero before
aggregation, so opposing directions count as irrelevant rather than negative.
Zero-norm rows on either side contribute a cosine of exactly 0.

The gate turns relevance into a multiplicative weight ``(r + eps) ** alpha``.
``alpha = 0`` reduces to uniform weights; with no usable text rows the gate
is defined as exactly all-ones, so a text-free run never perturbs the raw
energy ordering.
"""

import enum
import json
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np


class RelevanceFormulation(enum.Enum):
    """How per-token cosines against the text rows are aggregated."""

    MAX_COS = "max"
    MEAN_COS = "mean"
    POOLED_COS = "pooled"


@dataclass(frozen=True)
class GateConfig:
    """Parameters of the relevance gate ``w = (r + epsilon) ** alpha``."""

    alpha: float = 0.75
    epsilon: float = 1e-6

    def __post_init__(self):
        if not (self.alpha >= 0.0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be finite and > 0, got {self.epsilon}")


def _unit_rows(matrix):
    """Rows scaled to unit length; zero rows stay zero."""
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    out = np.zeros_like(matrix)
    nonzero = norms > 0.0
    out[nonzero] = matrix[nonzero] / norms[nonzero, None]
    return out


def relevance_from_arrays(tokens, text_rows, formulation):
    """Relevance of each token row against a non-empty stack of text rows.

    Args:
        tokens: (T, d) float array of token embeddings.
        text_rows: (L, d) float array with L >= 1, already mask-filtered.
        formulation: member of :class:`RelevanceFormulation`.

    Returns:
        (T,) float64 vector with every entry in [0, 1].
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    text_rows = np.asarray(text_rows, dtype=np.float64)
    if text_rows.shape[0] == 0:
        raise ValueError("no effective text rows; use gate_weights for the text-free path")
    if text_rows.shape[1] != tokens.shape[1]:
        raise ValueError(
            f"dimension mismatch: tokens are {tokens.shape[1]}-dim, "
            f"text rows are {text_rows.shape[1]}-dim"
        )
    token_units = _unit_rows(tokens)
    if formulation is RelevanceFormulation.POOLED_COS:
        pooled = text_rows.mean(axis=0)
        pooled_unit = _unit_rows(pooled[None, :])[0]
        scores = token_units @ pooled_unit
        return np.clip(scores, 0.0, 1.0)
    cosines = token_units @ _unit_rows(text_rows).T
    clamped = np.clip(cosines, 0.0, 1.0)
    if formulation is RelevanceFormulation.MAX_COS:
        return clamped.max(axis=1)
    if formulation is RelevanceFormulation.MEAN_COS:
        return clamped.mean(axis=1)
    raise ValueError(f"unknown relevance formulation {formulation!r}")


def text_relevance(tokens, text, formulation=RelevanceFormulation.MAX_COS):
    """Relevance vector for a :class:`TokenMatrix` against a :class:`TextMatrix`.

    Applies the text keep mask first.  Raises ``ValueError`` if no text rows
    survive; callers that want the text-free behaviour should skip relevance
    entirely and take uniform gate weights.
    """
    return relevance_from_arrays(tokens.data, text.effective_rows(), formulation)


def gate_weights(relevance, gate=GateConfig()):
    """Per-token gate weights ``(r + epsilon) ** alpha``.

    Use :func:`uniform_weights` for the text-free path; this function
    requires an actual relevance vector.
    """
    scores = np.asarray(relevance, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError(f"relevance must be 1-D, got {scores.ndim}-D")
    return np.power(scores + gate.epsilon, gate.alpha)


def uniform_weights(count):
    """The text-free gate: exactly all-ones, never ``(eps) ** alpha``."""
    return np.ones(int(count), dtype=np.float64)


def clean_text_tokens(tokens, patterns=None):
    """Boolean keep mask over text tokens, dropping boilerplate matches.

    Args:
        tokens: list of token strings, aligned with the text-matrix rows.
        patterns: iterable of regex strings; a token matching any pattern
            (via ``re.search``) is dropped.  ``None`` selects the packaged
            defaults.

    Returns:
        Boolean ndarray, True where the token is kept.
    """
    if patterns is None:
        patterns = default_patterns()
    compiled = []
    for pat in patterns:
        try:
            compiled.append(re.compile(pat))
        except re.error as exc:
            raise ValueError(f"bad filter pattern {pat!r}: {exc}") from exc
    keep = [not any(c.search(tok) for c in compiled) for tok in tokens]
    return np.array(keep, dtype=bool)


def default_patterns():
    """The packaged boilerplate filter patterns (answer-format directives etc.)."""
    text = resources.files("resprune").joinpath("data/default_patterns.json").read_text("ascii")
    return list(json.loads(text))
