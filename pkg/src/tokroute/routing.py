"""Per-token routing decisions.

Three deterministic mechanisms produce the same decision type: a
per-sequence baseline (every token inherits its sequence's target),
vocabulary routing (contiguous id ranges map to modalities), and
compositional routing (request adapter crossed with vocabulary
modality). Learned routing lives in the molora module and emits the
same type.

Modalities, adapters, and composite targets are 0-based everywhere.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .linalg import DTYPE

PROVENANCES = ("per-sequence", "vocab", "compositional", "learned")


class ComparisonCounter:
    """Counts ordered comparisons performed by route_vocab."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def reset(self):
        self.count = 0


# module-level instrument; tests reset it around calls
comparison_counter = ComparisonCounter()


@dataclass
class TokenBatch:
    """A flat batch of n tokens with per-token ids and feature rows."""

    vocab_ids: np.ndarray
    seq_ids: np.ndarray
    adapter_ids: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        self.vocab_ids = np.asarray(self.vocab_ids, dtype=np.int64)
        self.seq_ids = np.asarray(self.seq_ids, dtype=np.int64)
        self.adapter_ids = np.asarray(self.adapter_ids, dtype=np.int64)
        self.features = np.ascontiguousarray(self.features, dtype=DTYPE)
        if self.features.ndim != 2:
            raise ShapeError("features must be a (n, d) matrix")
        n = self.features.shape[0]
        for name in ("vocab_ids", "seq_ids", "adapter_ids"):
            v = getattr(self, name)
            if v.ndim != 1 or v.shape[0] != n:
                raise ShapeError(f"{name} must be a length-{n} vector, got shape {v.shape}")
            if n and v.min() < 0:
                raise ShapeError(f"{name} contains negative ids")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


class VocabBreaks:
    """Vocabulary breakpoints b_0 < b_1 < ... < b_M with b_0 = 0.

    Range m is the half-open interval [b_m, b_{m+1}); there are
    M = len(breaks) - 1 ranges and b_M is the vocabulary size V.
    """

    def __init__(self, breaks):
        b = np.asarray(breaks, dtype=np.int64)
        if b.ndim != 1 or b.shape[0] < 2:
            raise ConfigError("breaks must be a vector of at least two values")
        if b[0] != 0:
            raise ConfigError(f"first break must be 0, got {b[0]}")
        if not np.all(np.diff(b) > 0):
            raise ConfigError("breaks must be strictly increasing")
        self.breaks = b

    @property
    def num_modalities(self):
        return self.breaks.shape[0] - 1

    @property
    def vocab_size(self):
        return int(self.breaks[-1])

    def __repr__(self):
        return f"VocabBreaks({self.breaks.tolist()})"


@dataclass
class RoutingDecision:
    """Per-token targets r ∈ [0, num_targets) plus where they came from."""

    targets: np.ndarray
    num_targets: int
    provenance: str

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.int64)
        if self.targets.ndim != 1:
            raise ShapeError("targets must be a vector")
        self.num_targets = int(self.num_targets)
        if self.num_targets < 1:
            raise ShapeError("num_targets must be positive")
        if self.targets.size and (self.targets.min() < 0 or self.targets.max() >= self.num_targets):
            raise ShapeError(f"targets must lie in [0, {self.num_targets})")
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"unknown provenance {self.provenance!r}")

    @property
    def n(self):
        return self.targets.shape[0]


def route_vocab(v, breaks):
    """Modality index of vocabulary id v by linear scan over ranges.

    Performs at most M-1 ordered comparisons (counted on
    comparison_counter); id in [b_m, b_{m+1}) maps to m.
    """
    v = int(v)
    b = breaks.breaks
    if v < 0 or v >= breaks.vocab_size:
        raise IndexError(f"vocab id {v} outside [0, {breaks.vocab_size})")
    m_last = breaks.num_modalities - 1
    for m in range(m_last):
        comparison_counter.count += 1
        if v < b[m + 1]:
            return m
    # only one range can remain, no comparison needed
    return m_last


def route_batch_vocab(batch, breaks):
    """Vocabulary-route every token; vectorized form of route_vocab."""
    v = batch.vocab_ids
    if v.size and (v.min() < 0 or v.max() >= breaks.vocab_size):
        raise IndexError(f"vocab ids outside [0, {breaks.vocab_size})")
    targets = np.searchsorted(breaks.breaks, v, side="right") - 1
    return RoutingDecision(targets, breaks.num_modalities, "vocab")


def route_batch_compositional(batch, breaks):
    """Cross request adapter with vocabulary modality.

    Target of token i is adapter_ids[i] * M + modality(vocab_ids[i]);
    the target space has num_adapters * M entries, where num_adapters
    is max(adapter_ids) + 1.
    """
    modality = route_batch_vocab(batch, breaks).targets
    m_count = breaks.num_modalities
    num_adapters = int(batch.adapter_ids.max()) + 1 if batch.n else 1
    targets = batch.adapter_ids * m_count + modality
    return RoutingDecision(targets, num_adapters * m_count, "compositional")


def decompose_compositional(targets, num_modalities):
    """Invert the composite index back to (adapter, modality) vectors."""
    t = np.asarray(targets, dtype=np.int64)
    return t // num_modalities, t % num_modalities


def route_batch_per_sequence(batch, seq_to_adapter, num_targets=None):
    """Per-sequence baseline: every token takes its sequence's target.

    seq_to_adapter maps sequence id to target id; an unmapped sequence
    is a configuration error.
    """
    present = np.unique(batch.seq_ids)
    missing = [int(s) for s in present if int(s) not in seq_to_adapter]
    if missing:
        raise ConfigError(f"sequences without a target mapping: {missing}")
    targets = np.array([seq_to_adapter[int(s)] for s in batch.seq_ids], dtype=np.int64)
    if num_targets is None:
        num_targets = int(targets.max()) + 1 if targets.size else 1
    return RoutingDecision(targets, num_targets, "per-sequence")


def modality_mask(decision):
    """Boolean (n, n) matrix with mask[i, j] = targets[i] == targets[j]."""
    t = decision.targets
    return t[:, None] == t[None, :]


def sort_permutation(decision):
    """Stable permutation that orders tokens by target.

    Applying it to modality_mask's rows and columns yields an exactly
    block-diagonal matrix whose block sizes are the target histogram.
    """
    return np.argsort(decision.targets, kind="stable")
