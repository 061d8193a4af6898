"""Routing decision -> dispatch plan.

A plan is the target-agnostic middle step shared by every routing
mechanism: a histogram of tokens per target, per-target lists of
original token indices, and per-target compute tile sizes chosen from
the group's token count.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ShapeError

MODES = ("deterministic", "parallel")


@dataclass
class DispatchPlan:
    """Histogram, index groups, and tile config for one decision."""

    histogram: np.ndarray          # (C,) tokens per target
    groups: list                   # C arrays of original token indices
    tiles: list                    # C (block_m, block_n) pairs

    @property
    def num_targets(self):
        return self.histogram.shape[0]

    def nonempty(self):
        """Target ids with at least one token, ascending."""
        return [c for c in range(self.num_targets) if self.histogram[c] > 0]


def select_tiles(count):
    """Tile sizes for a group of `count` tokens.

    block_m: 16 below 64 tokens, 32 up to 255, 64 from 256.
    block_n: 32 below 128 tokens, 64 from 128.
    """
    count = int(count)
    if count < 0:
        raise ShapeError("count must be non-negative")
    if count < 64:
        block_m = 16
    elif count < 256:
        block_m = 32
    else:
        block_m = 64
    block_n = 32 if count < 128 else 64
    return block_m, block_n


def build_dispatch(decision, mode="deterministic", seed=0):
    """Group token indices by target.

    Deterministic mode processes tokens in index order, so each group
    lists its indices ascending. Parallel mode simulates concurrent
    position allocation by processing tokens in a seeded shuffled
    order: histogram and group contents (as multisets) are identical
    to deterministic mode, within-group order is not.
    """
    if mode not in MODES:
        raise ShapeError(f"unknown mode {mode!r}")
    targets = decision.targets
    c_count = decision.num_targets
    histogram = np.bincount(targets, minlength=c_count).astype(np.int64)

    order = np.arange(decision.n)
    if mode == "parallel":
        rng = np.random.default_rng(seed)
        rng.shuffle(order)

    # position allocation: cursor per target, one slot per token
    starts = np.zeros(c_count + 1, dtype=np.int64)
    np.cumsum(histogram, out=starts[1:])
    flat = np.empty(decision.n, dtype=np.int64)
    cursor = starts[:-1].copy()
    for i in order:
        c = targets[i]
        flat[cursor[c]] = i
        cursor[c] += 1

    groups = [flat[starts[c]:starts[c + 1]].copy() for c in range(c_count)]
    tiles = [select_tiles(int(h)) for h in histogram]
    return DispatchPlan(histogram=histogram, groups=groups, tiles=tiles)


def gather(features, group):
    """Rows of `features` at the group's indices, in group order."""
    features = np.asarray(features)
    idx = np.asarray(group, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= features.shape[0]):
        raise IndexError(f"group index outside [0, {features.shape[0]})")
    return features[idx]


def scatter(rows, group, into):
    """Copy of `into` with the group's rows replaced by `rows`.

    Group indices must be unique; a duplicate would make the result
    depend on write order, which the plan forbids.
    """
    rows = np.asarray(rows)
    idx = np.asarray(group, dtype=np.int64)
    into = np.asarray(into)
    if rows.shape[0] != idx.shape[0]:
        raise ShapeError(f"{rows.shape[0]} rows for {idx.shape[0]} indices")
    if idx.size and (idx.min() < 0 or idx.max() >= into.shape[0]):
        raise IndexError(f"group index outside [0, {into.shape[0]})")
    if np.unique(idx).size != idx.size:
        raise ContractViolation("duplicate index in scatter group")
    out = into.copy()
    out[idx] = rows
    return out
