"""Grouped adapter computation and work accounting.

Three ways to evaluate the same adapted forward: a grouped per-token
path driven by a dispatch plan, a token-by-token reference loop that
serves as ground truth, and a multi-pass simulation of the
per-sequence baseline (one full pass per needed target, non-matching
rows masked). All three must agree; they differ only in counted work.

The base projection is optional. When omitted the base term is the
identity, isolating the adapter delta.
"""

from dataclasses import dataclass

import numpy as np

from . import dispatch
from .errors import ContractViolation, ShapeError
from .linalg import DTYPE, add, matmul


@dataclass(frozen=True)
class WorkReport:
    """Integer work accounting for one forward evaluation.

    forward_passes: batch-level passes executed.
    token_passes: token ✕ pass units actually processed.
    launches: logical grouped-matmul invocations.
    """

    forward_passes: int
    token_passes: int
    launches: int


def _base_term(features, base_w):
    if base_w is None:
        return features.astype(DTYPE)
    base_w = np.asarray(base_w, dtype=DTYPE)
    if base_w.shape != (features.shape[1], features.shape[1]):
        raise ShapeError(f"base_w must be {(features.shape[1],) * 2}, got {base_w.shape}")
    return matmul(features, base_w)


def _check_catalog(decision, catalog, d):
    if decision.num_targets > catalog.num_entries:
        raise ShapeError(
            f"decision has {decision.num_targets} targets, catalog {catalog.num_entries} entries"
        )
    if catalog.d != d:
        raise ShapeError(f"catalog d={catalog.d} but features have d={d}")


def lora_forward_per_token(batch, decision, catalog, base_w=None, plan=None):
    """Adapted forward via grouped computation.

    Row i of the output is base(x_i) + x_i A_c B_c with c the token's
    target. Tokens are gathered per target, pushed through that
    target's low-rank pair in one grouped matmul, and scattered back.
    One batch pass; one launch per nonempty group.
    """
    if decision.n != batch.n:
        raise ShapeError(f"decision covers {decision.n} tokens, batch has {batch.n}")
    _check_catalog(decision, catalog, batch.d)
    if plan is None:
        plan = dispatch.build_dispatch(decision)

    delta = np.zeros((batch.n, batch.d), dtype=DTYPE)
    launches = 0
    for c in plan.nonempty():
        group = plan.groups[c]
        a, b = catalog.factors(c)
        x_g = dispatch.gather(batch.features, group)
        delta = dispatch.scatter(matmul(matmul(x_g, a), b), group, delta)
        launches += 1

    out = add(_base_term(batch.features, base_w), delta)
    return out, WorkReport(forward_passes=1, token_passes=batch.n, launches=launches)


def lora_forward_reference(batch, decision, catalog, base_w=None):
    """Ground-truth adapted forward: plain loop, one token at a time."""
    if decision.n != batch.n:
        raise ShapeError(f"decision covers {decision.n} tokens, batch has {batch.n}")
    _check_catalog(decision, catalog, batch.d)
    base = _base_term(batch.features, base_w)
    out = np.empty((batch.n, batch.d), dtype=DTYPE)
    for i in range(batch.n):
        a, b = catalog.factors(int(decision.targets[i]))
        x_i = batch.features[i:i + 1]
        out[i] = add(base[i:i + 1], matmul(matmul(x_i, a), b))
    return out


def per_sequence_simulate(batch, decision, seq_needed, catalog, base_w=None):
    """Simulate the per-sequence baseline: one full pass per target.

    seq_needed maps each sequence id to the set of targets its tokens
    require; every pass runs the whole batch through a single target's
    pair and keeps only the rows whose own target matches. Output rows
    therefore equal the per-token path; the work does not.
    """
    if decision.n != batch.n:
        raise ShapeError(f"decision covers {decision.n} tokens, batch has {batch.n}")
    _check_catalog(decision, catalog, batch.d)

    needed_union = set()
    for s, targets in seq_needed.items():
        needed_union.update(int(t) for t in targets)
    for i in range(batch.n):
        s = int(batch.seq_ids[i])
        if s not in seq_needed or int(decision.targets[i]) not in set(
            int(t) for t in seq_needed[s]
        ):
            raise ContractViolation(
                f"token {i} needs target {int(decision.targets[i])} "
                f"not declared for sequence {s}"
            )

    base = _base_term(batch.features, base_w)
    out = np.zeros((batch.n, batch.d), dtype=DTYPE)
    passes = sorted(needed_union)
    for t in passes:
        a, b = catalog.factors(t)
        full = add(base, matmul(matmul(batch.features, a), b))
        match = decision.targets == t
        out[match] = full[match]

    k = len(passes)
    return out, WorkReport(forward_passes=k, token_passes=k * batch.n, launches=k)


def count_work(decision, seq_ids=None, seq_needed=None):
    """Work accounting without running any math.

    With only a decision: the per-token path (one pass, n token-passes,
    one launch per nonempty target). With seq_ids and seq_needed: the
    per-sequence baseline, batching sequences by needed target, so each
    pass processes exactly the sequences that require it.
    """
    n = decision.n
    if seq_needed is None:
        nonempty = int(np.count_nonzero(np.bincount(decision.targets,
                                                    minlength=decision.num_targets)))
        return WorkReport(forward_passes=1, token_passes=n, launches=max(nonempty, 1))

    if seq_ids is None:
        raise ShapeError("per-sequence accounting needs seq_ids")
    seq_ids = np.asarray(seq_ids, dtype=np.int64)
    if seq_ids.shape[0] != n:
        raise ShapeError(f"seq_ids must have length {n}")

    seq_len = {int(s): int(c) for s, c in zip(*np.unique(seq_ids, return_counts=True))}
    union = set()
    token_passes = 0
    for s, length in seq_len.items():
        needs = set(int(t) for t in seq_needed[s])
        union.update(needs)
        token_passes += len(needs) * length
    k = len(union)
    return WorkReport(forward_passes=k, token_passes=token_passes, launches=k)


def seq_needed_from_decision(batch, decision):
    """Per-sequence needed-target sets implied by a decision."""
    needed = {}
    for s in np.unique(batch.seq_ids):
        mask = batch.seq_ids == s
        needed[int(s)] = set(int(t) for t in np.unique(decision.targets[mask]))
    return needed
