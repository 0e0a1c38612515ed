"""Greedy residual-energy token selection.

The selector keeps an orthonormal basis Q of the span of the chosen token
embeddings.  A token's energy is the squared norm of its component outside
that span; the next pick maximizes energy times its relevance gate weight.
After each pick the basis grows by one direction (Gram-Schmidt with a
second reorthogonalization pass) and every energy drops by the squared
projection onto the new direction, clamped at zero.

Tokens whose residual falls below ``span_tol`` times their own norm add no
usable direction: they are still recorded against the budget, but the basis
and the energies stay untouched.  If every unselected token's energy falls
to span_tol times the largest initial energy before the budget is spent,
the remaining slots are filled by a deterministic fallback ranking instead
of the (now meaningless) energy argmax.

All arithmetic is float64; ties everywhere break toward the lowest index.
"""

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .npyio import TokenMatrix
from .relevance import (
    GateConfig,
    RelevanceFormulation,
    gate_weights,
    text_relevance,
    uniform_weights,
)
from .seeding import SeedStrategy, default_strategy, select_seed


class ExhaustFallback(enum.Enum):
    """How leftover budget is filled once residual energy is exhausted."""

    BY_WEIGHT = "weight"
    BY_NORM = "norm"


@dataclass(frozen=True)
class PruneConfig:
    """Everything that determines a selection run, minus the data."""

    budget: int
    gate: GateConfig = GateConfig()
    formulation: RelevanceFormulation = RelevanceFormulation.MAX_COS
    seed: SeedStrategy | None = None
    span_tol: float = 1e-6
    exhaust_fallback: ExhaustFallback = ExhaustFallback.BY_WEIGHT

    def __post_init__(self):
        if not isinstance(self.budget, (int, np.integer)) or self.budget < 1:
            raise ValueError(f"budget must be a positive integer, got {self.budget!r}")
        object.__setattr__(self, "budget", int(self.budget))
        if not (0.0 < self.span_tol < 1.0):
            raise ValueError(f"span_tol must lie in (0, 1), got {self.span_tol!r}")

    def as_dict(self):
        """Flat JSON-friendly form; ``seed_strategy`` is None until resolved."""
        return {
            "budget": self.budget,
            "alpha": self.gate.alpha,
            "epsilon": self.gate.epsilon,
            "relevance": self.formulation.value,
            "seed_strategy": None if self.seed is None else self.seed.value,
            "span_tol": self.span_tol,
            "exhaust_fallback": self.exhaust_fallback.value,
        }

    @classmethod
    def from_mapping(cls, mapping):
        """Build a config from the flat key set used by files and the CLI.

        Unknown keys raise ``ValueError`` so config typos fail loudly.
        """
        known = {
            "budget",
            "alpha",
            "epsilon",
            "relevance",
            "seed_strategy",
            "span_tol",
            "exhaust_fallback",
        }
        extra = set(mapping) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "budget" not in mapping:
            raise ValueError("config needs a budget")
        gate = GateConfig(
            alpha=float(mapping.get("alpha", 0.75)),
            epsilon=float(mapping.get("epsilon", 1e-6)),
        )
        seed = mapping.get("seed_strategy")
        kwargs = {
            "budget": int(mapping["budget"]),
            "gate": gate,
            "formulation": _parse_enum(
                RelevanceFormulation, mapping.get("relevance", "max"), "relevance"
            ),
            "seed": None if seed is None else _parse_enum(SeedStrategy, seed, "seed_strategy"),
            "exhaust_fallback": _parse_enum(
                ExhaustFallback, mapping.get("exhaust_fallback", "weight"), "exhaust_fallback"
            ),
        }
        if "span_tol" in mapping:
            kwargs["span_tol"] = float(mapping["span_tol"])
        return cls(**kwargs)


def _parse_enum(enum_cls, value, label):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        options = ", ".join(member.value for member in enum_cls)
        raise ValueError(f"bad {label} {value!r}, expected one of: {options}") from None


class OrthoBasis:
    """Column-orthonormal basis grown one direction at a time."""

    def __init__(self, dim, capacity=8):
        self._store = np.zeros((int(dim), max(1, int(capacity))), dtype=np.float64)
        self.cols = 0

    @property
    def dim(self):
        return self._store.shape[0]

    @property
    def matrix(self):
        """(d, cols) view of the live columns; treat as read-only."""
        return self._store[:, : self.cols]

    def extend(self, vector, span_tol=1e-6):
        """Append the unit residual of ``vector`` against the current span.

        Returns the new column, or None when the vector adds nothing:
        either it is exactly zero or its residual norm is below
        ``span_tol`` times its own norm.
        """
        v = np.asarray(vector, dtype=np.float64)
        norm_v = np.linalg.norm(v)
        if norm_v == 0.0:
            return None
        q_mat = self.matrix
        u = v - q_mat @ (q_mat.T @ v)
        # One repeat pass keeps the basis orthonormal to near machine
        # precision even when the new vector is almost in the span.
        u -= q_mat @ (q_mat.T @ u)
        norm_u = np.linalg.norm(u)
        if norm_u < span_tol * norm_v:
            return None
        q_new = u / norm_u
        if self.cols == self._store.shape[1]:
            grown = np.zeros((self.dim, self._store.shape[1] * 2), dtype=np.float64)
            grown[:, : self.cols] = self._store[:, : self.cols]
            self._store = grown
        self._store[:, self.cols] = q_new
        self.cols += 1
        return q_new

    def orthogonality_defect(self):
        """max |Q^T Q - I|; 0.0 for an empty basis."""
        q_mat = self.matrix
        if self.cols == 0:
            return 0.0
        gram = q_mat.T @ q_mat
        return float(np.abs(gram - np.eye(self.cols)).max())


@dataclass
class ResidualState:
    """Per-token residual energies plus the selected-row flags."""

    energy: np.ndarray
    selected: np.ndarray

    @classmethod
    def from_tokens(cls, tokens):
        data = tokens.data if isinstance(tokens, TokenMatrix) else np.asarray(tokens, np.float64)
        energy = np.einsum("ij,ij->i", data, data)
        return cls(energy=energy, selected=np.zeros(data.shape[0], dtype=bool))


def update_energies(state, tokens, q_new):
    """Energies after the basis gained ``q_new``: e - (v . q)^2, clamped at 0."""
    data = tokens.data if isinstance(tokens, TokenMatrix) else np.asarray(tokens, np.float64)
    proj = data @ np.asarray(q_new, dtype=np.float64)
    energy = state.energy - proj * proj
    np.maximum(energy, 0.0, out=energy)
    return ResidualState(energy=energy, selected=state.selected.copy())


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one greedy run.

    ``indices`` is in selection order.  ``raw_energy[t]`` is the residual
    energy of the t-th pick at the moment it was chosen (the seed's entry
    is its full squared norm); ``gated_energy`` is that times the token's
    gate weight.  ``recon_error`` is the summed final energy of all tokens,
    i.e. the squared Frobenius reconstruction error.
    """

    indices: tuple
    raw_energy: tuple
    gated_energy: tuple
    weights: np.ndarray
    recon_error: float
    config: PruneConfig

    def __post_init__(self):
        k = len(self.indices)
        if len(set(self.indices)) != k:
            raise ValueError("selected indices must be pairwise distinct")
        if not all(0 <= i < self.weights.shape[0] for i in self.indices):
            raise ValueError("selected index out of range")
        if len(self.raw_energy) != k or len(self.gated_energy) != k:
            raise ValueError("energy traces must match the selection length")
        if any(e < 0.0 for e in self.raw_energy) or self.recon_error < 0.0:
            raise ValueError("energies are squared norms and cannot be negative")

    def as_dict(self):
        return {
            "indices": [int(i) for i in self.indices],
            "raw_energy": [float(e) for e in self.raw_energy],
            "gated_energy": [float(e) for e in self.gated_energy],
            "weights": [float(w) for w in self.weights],
            "recon_error": float(self.recon_error),
            "config": self.config.as_dict(),
        }


@dataclass
class GreedyTrace:
    """Diagnostics from a traced run, for verification and tests."""

    seed_index: int
    basis: OrthoBasis
    rejected: list
    energy_history: list = field(default_factory=list)
    relevance: np.ndarray | None = None


def _exhaust_order(fallback, weights, sq_norms):
    if fallback is ExhaustFallback.BY_WEIGHT:
        ranking = weights
    elif fallback is ExhaustFallback.BY_NORM:
        ranking = sq_norms
    else:
        raise ValueError(f"unknown exhaust fallback {fallback!r}")
    # Stable sort on the negated key: descending, ties toward lower index.
    return np.argsort(-ranking, kind="stable")


def greedy_select_traced(tokens, text=None, config=None, scores=None, capture_energy=True):
    """Run the greedy selection and keep diagnostics.

    Args:
        tokens: :class:`TokenMatrix` of shape (T, d).
        text: optional :class:`TextMatrix`; None or zero effective rows
            means uniform gate weights.
        config: :class:`PruneConfig`; ``config.seed=None`` resolves to the
            default strategy for the given inputs.
        scores: optional :class:`ScoreVector` for score-driven seeding.
        capture_energy: snapshot the energy vector after every pick
            (costs one (T,) copy per step).

    Returns:
        (SelectionResult, GreedyTrace)
    """
    if config is None:
        raise ValueError("a PruneConfig is required")
    total = tokens.count
    if config.budget > total:
        raise ValueError(f"budget {config.budget} exceeds token count {total}")

    data = tokens.data
    text_rows = text.effective_rows() if text is not None else None
    text_present = text_rows is not None and text_rows.shape[0] > 0
    if text_present:
        rel = text_relevance(tokens, text, config.formulation)
        weights = gate_weights(rel, config.gate)
    else:
        rel = None
        weights = uniform_weights(total)

    strategy = config.seed if config.seed is not None else default_strategy(scores)
    resolved = replace(config, seed=strategy)
    seed_index = select_seed(tokens, strategy, relevance=rel, scores=scores)

    sq_norms = np.einsum("ij,ij->i", data, data)
    exhaust_threshold = config.span_tol * float(sq_norms.max())

    basis = OrthoBasis(tokens.dim, capacity=config.budget)
    state = ResidualState(energy=sq_norms.copy(), selected=np.zeros(total, dtype=bool))
    trace = GreedyTrace(seed_index=seed_index, basis=basis, rejected=[], relevance=rel)

    indices = [seed_index]
    raw = [float(state.energy[seed_index])]
    gated = [raw[0] * float(weights[seed_index])]
    q_new = basis.extend(data[seed_index], config.span_tol)
    trace.rejected.append(q_new is None)
    if q_new is not None:
        state = update_energies(state, data, q_new)
    state.selected[seed_index] = True
    if capture_energy:
        trace.energy_history.append(state.energy.copy())

    while len(indices) < config.budget:
        open_energy = np.where(state.selected, -np.inf, state.energy)
        if open_energy.max() <= exhaust_threshold:
            order = _exhaust_order(config.exhaust_fallback, weights, sq_norms)
            for idx in order:
                if len(indices) >= config.budget:
                    break
                idx = int(idx)
                if state.selected[idx]:
                    continue
                indices.append(idx)
                raw.append(float(state.energy[idx]))
                gated.append(float(state.energy[idx]) * float(weights[idx]))
                state.selected[idx] = True
                trace.rejected.append(True)
                if capture_energy:
                    trace.energy_history.append(state.energy.copy())
            break

        scored = np.where(state.selected, -np.inf, state.energy * weights)
        pick = int(np.argmax(scored))
        indices.append(pick)
        raw.append(float(state.energy[pick]))
        gated.append(float(state.energy[pick]) * float(weights[pick]))
        q_new = basis.extend(data[pick], config.span_tol)
        trace.rejected.append(q_new is None)
        if q_new is not None:
            state = update_energies(state, data, q_new)
        state.selected[pick] = True
        if capture_energy:
            trace.energy_history.append(state.energy.copy())

    result = SelectionResult(
        indices=tuple(indices),
        raw_energy=tuple(raw),
        gated_energy=tuple(gated),
        weights=weights,
        recon_error=float(state.energy.sum()),
        config=resolved,
    )
    return result, trace


def greedy_select(tokens, text=None, config=None, scores=None):
    """Greedy selection without diagnostics; see :func:`greedy_select_traced`."""
    result, _ = greedy_select_traced(
        tokens, text=text, config=config, scores=scores, capture_energy=False
    )
    return result
