"""Slot table, LRU pager, workload generators, and the latency model."""

import numpy as np
import pytest

from tokroute.errors import ConfigError
from tokroute.memory import (
    CostModel,
    PagerState,
    SlotTable,
    StepStructure,
    _percentile,
    gen_workload,
    hotset_access,
    measure_miss_rate,
    pager_access,
    simulate_serving,
    step_latency,
)


def brute_force_lru(accesses, capacity):
    """Reference LRU: recency list maintained by explicit search."""
    recency = []  # index 0 = least recently used
    hits = misses = 0
    evictions = []
    for a in accesses:
        if a in recency:
            hits += 1
            recency.remove(a)
            recency.append(a)
            evictions.append(None)
        else:
            misses += 1
            ev = None
            if len(recency) >= capacity:
                ev = recency.pop(0)
            recency.append(a)
            evictions.append(ev)
    return hits, misses, evictions


def test_pager_matches_brute_force_lru():
    rng = np.random.default_rng(0)
    for trial in range(20):
        capacity = int(rng.integers(1, 6))
        accesses = rng.integers(0, 8, 300).tolist()
        state = PagerState(capacity)
        got_evictions = []
        for a in accesses:
            outcome, ev = pager_access(state, a)
            got_evictions.append(ev)
        hits, misses, want_evictions = brute_force_lru(accesses, capacity)
        assert state.hits == hits
        assert state.misses == misses
        assert got_evictions == want_evictions


def test_pager_rejects_zero_capacity():
    with pytest.raises(ConfigError):
        PagerState(0)


def test_slot_table_lookup_is_stable_until_apply():
    table = SlotTable(2)
    table.prefill([5, 7])
    assert hotset_access(table, 5) == 0
    assert hotset_access(table, 7) == 1
    assert hotset_access(table, 9) is None
    table.queue_update(0, 9)
    # queued update must not be visible yet
    assert hotset_access(table, 5) == 0
    assert hotset_access(table, 9) is None
    table.apply_pending()
    assert hotset_access(table, 9) == 0
    assert hotset_access(table, 5) is None
    assert table.pending_updates == []


def test_slot_table_stays_injective():
    table = SlotTable(3)
    table.prefill([1, 2, 3])
    table.queue_update(0, 3)  # adapter 3 moves from slot 2 to slot 0
    table.apply_pending()
    assert hotset_access(table, 3) == 0
    assert hotset_access(table, 1) is None
    assert hotset_access(table, 2) == 1


def test_slot_table_validates_inputs():
    with pytest.raises(ConfigError):
        SlotTable(0)
    table = SlotTable(2)
    with pytest.raises(ConfigError):
        table.prefill([1, 2, 3])
    with pytest.raises(ConfigError):
        table.queue_update(2, 0)


def test_workloads_are_seeded_and_in_range():
    for kind, params in (("uniform", None), ("zipfian", {"s": 1.2}),
                         ("bursty", {"mean_run": 8}),
                         ("adversarial", {"capacity": 4})):
        a = gen_workload(kind, 8, 500, seed=42, params=params)
        b = gen_workload(kind, 8, 500, seed=42, params=params)
        assert np.array_equal(a, b)
        assert a.min() >= 0 and a.max() < 8
        assert len(a) == 500


def test_zipfian_concentrates_on_low_ranks():
    w = gen_workload("zipfian", 16, 20000, seed=1, params={"s": 5.0})
    freq = np.bincount(w, minlength=16) / len(w)
    assert freq[0] > 0.9


def test_bursty_runs_have_requested_mean_length():
    w = gen_workload("bursty", 8, 50000, seed=2, params={"mean_run": 32})
    runs = np.sum(np.diff(w) != 0) + 1
    mean_run = len(w) / runs
    assert 20 < mean_run < 48


def test_adversarial_cycles_over_capacity_plus_one():
    w = gen_workload("adversarial", 8, 100, seed=0, params={"capacity": 4})
    assert np.array_equal(w[:6], [0, 1, 2, 3, 4, 0])
    assert w.max() == 4
    # every access misses: the classic sequential-scan worst case
    assert measure_miss_rate(w, capacity=4, adapters_per_step=4) == 4.0
    with pytest.raises(ConfigError):
        gen_workload("adversarial", 4, 100, seed=0, params={"capacity": 4})
    with pytest.raises(ConfigError):
        gen_workload("adversarial", 8, 100, seed=0)


def test_workload_validation():
    with pytest.raises(ConfigError):
        gen_workload("sinusoidal", 8, 100, seed=0)
    with pytest.raises(ConfigError):
        gen_workload("zipfian", 8, 100, seed=0, params={"s": 0.0})
    with pytest.raises(ConfigError):
        gen_workload("bursty", 8, 100, seed=0, params={"mean_run": 0.5})


def test_percentile_nearest_rank():
    vals = np.array([1.0, 2.0, 3.0, 4.0])
    assert _percentile(vals, 50) == 2.0
    assert _percentile(vals, 99) == 4.0
    assert _percentile(vals, 100) == 4.0
    assert _percentile(np.array([7.0]), 99) == 7.0


def test_cost_model_rejects_negative_constants():
    with pytest.raises(ConfigError):
        CostModel(pass_cost_per_token=-1.0, paging_penalty=0.0, launch_overhead=0.0)


def test_step_latency_decomposition():
    cost = CostModel(pass_cost_per_token=2.0, paging_penalty=10.0,
                     launch_overhead=1.0)
    st = StepStructure(n=100, adapters_per_step=4)
    # k passes of the whole batch, 12 launches each
    assert step_latency("per-seq+hotset", st, cost, misses=0) == 4 * 100 * 2.0 + 48
    # one grouped pass, base 4 launches plus one per adapter
    assert step_latency("per-token+hotset", st, cost, misses=0) == 100 * 2.0 + 8
    # graph capture collapses launches to one
    assert step_latency("per-token+graph", st, cost, misses=0) == 100 * 2.0 + 1
    # paging adds the per-miss penalty on top
    assert step_latency("per-seq+paging", st, cost, misses=3) == (
        4 * 100 * 2.0 + 48 + 30.0
    )


def test_hotset_latency_ignores_residency_misses():
    st = StepStructure(n=10, adapters_per_step=2)
    cost = CostModel(pass_cost_per_token=1.0, paging_penalty=100.0,
                     launch_overhead=0.0)
    w = gen_workload("uniform", 16, 400, seed=3)
    stats = simulate_serving(w, "per-token+hotset", cost, st, slots=2,
                             num_adapters=16)
    # slot table holds 2 of 16 adapters, so misses happen constantly,
    # yet the latency distribution never sees the penalty
    assert stats.miss_rate > 0.5
    assert stats.p99 == stats.p50 == stats.mean == 10.0


def test_paging_latency_charges_misses():
    st = StepStructure(n=10, adapters_per_step=2)
    cost = CostModel(pass_cost_per_token=0.0, paging_penalty=1.0,
                     launch_overhead=0.0)
    w = gen_workload("adversarial", 8, 400, seed=0, params={"capacity": 4})
    stats = simulate_serving(w, "per-seq+paging", cost, st, capacity=4)
    assert stats.mean == 2.0  # every access misses, 2 per step
    assert stats.miss_rate == 1.0


def test_simulate_serving_validates_mode_and_length():
    st = StepStructure(n=10, adapters_per_step=4)
    cost = CostModel(pass_cost_per_token=1.0, paging_penalty=1.0,
                     launch_overhead=1.0)
    with pytest.raises(ConfigError):
        simulate_serving(np.array([0, 1]), "warp-drive", cost, st)
    with pytest.raises(ConfigError):
        simulate_serving(np.array([0, 1]), "per-seq+paging", cost, st)
