"""Adapter-memory simulation: hot-set slot table vs LRU paging.

Serving steps are costed with a transparent additive model: compute
proportional to passes and tokens, a per-miss paging penalty, and a
per-launch overhead. Workload kind changes which adapters each step
touches (and so cache behavior); the pass and launch structure of a
step is fixed by configuration, which is what makes hot-set latency
workload-invariant in this model.
"""

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

WORKLOAD_KINDS = ("uniform", "zipfian", "bursty", "adversarial")
ROUTING_MODES = ("per-seq+paging", "per-seq+hotset", "per-token+hotset", "per-token+graph")


class SlotTable:
    """Fixed set of S adapter slots with an asynchronously updated map.

    Lookups never move anything; fills and evictions are queued and
    applied between steps, off the modeled critical path.
    """

    def __init__(self, slots):
        if slots < 1:
            raise ConfigError("slot table needs at least one slot")
        self.slots = int(slots)
        self._slot_to_adapter = {}
        self._adapter_to_slot = {}
        self.pending_updates = []

    def prefill(self, adapters):
        """Install adapters into slots 0..len-1 before serving starts."""
        if len(adapters) > self.slots:
            raise ConfigError(f"{len(adapters)} adapters for {self.slots} slots")
        self._slot_to_adapter = {}
        self._adapter_to_slot = {}
        for s, a in enumerate(adapters):
            self._install(s, int(a))

    def _install(self, slot, adapter):
        old = self._slot_to_adapter.get(slot)
        if old is not None:
            del self._adapter_to_slot[old]
        if adapter in self._adapter_to_slot:
            # keep the map injective: drop the adapter's previous slot
            del self._slot_to_adapter[self._adapter_to_slot[adapter]]
        self._slot_to_adapter[slot] = adapter
        self._adapter_to_slot[adapter] = slot

    def lookup(self, adapter):
        """Slot holding the adapter, or None when not resident."""
        return self._adapter_to_slot.get(int(adapter))

    def queue_update(self, slot, adapter):
        """Record a (slot, adapter) install to apply between steps."""
        if not 0 <= slot < self.slots:
            raise ConfigError(f"slot {slot} outside [0, {self.slots})")
        self.pending_updates.append((int(slot), int(adapter)))

    def apply_pending(self):
        """Apply queued updates in order; the queue empties."""
        for slot, adapter in self.pending_updates:
            self._install(slot, adapter)
        self.pending_updates = []


def hotset_access(table, adapter):
    """Constant-time slot lookup. Returns the slot, or None (not resident)."""
    return table.lookup(adapter)


class PagerState:
    """LRU-managed resident set with hit/miss counters."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ConfigError("pager capacity must be positive")
        self.capacity = int(capacity)
        self.resident = OrderedDict()  # key: adapter id; last = MRU
        self.hits = 0
        self.misses = 0


def pager_access(state, adapter):
    """Access one adapter: ("hit", None) or ("miss", evicted-or-None).

    A hit refreshes the adapter to most recently used. A miss loads it,
    evicting the least recently used adapter when at capacity.
    """
    a = int(adapter)
    if a in state.resident:
        state.resident.move_to_end(a)
        state.hits += 1
        return "hit", None
    state.misses += 1
    evicted = None
    if len(state.resident) >= state.capacity:
        evicted, _ = state.resident.popitem(last=False)
    state.resident[a] = True
    return "miss", evicted


def gen_workload(kind, num_adapters, length, seed, params=None):
    """Deterministic adapter-access sequence of the given kind.

    uniform: i.i.d. over all adapters.
    zipfian: frequency of rank-i adapter proportional to (i+1)^-s, s from
      params["s"] (default 1.0).
    bursty: runs on one adapter with geometric run length, mean
      params["mean_run"] (default 32).
    adversarial: cyclic scan over params["capacity"] + 1 adapters, the
      classic LRU worst case; requires capacity + 1 <= num_adapters.
    """
    params = dict(params or {})
    if kind not in WORKLOAD_KINDS:
        raise ConfigError(f"unknown workload kind {kind!r}")
    if num_adapters < 1:
        raise ConfigError("num_adapters must be positive")
    if length < 1:
        raise ConfigError("length must be positive")
    rng = np.random.default_rng(seed)

    if kind == "uniform":
        return rng.integers(0, num_adapters, size=length, dtype=np.int64)

    if kind == "zipfian":
        s = float(params.get("s", 1.0))
        if s <= 0:
            raise ConfigError(f"zipf exponent must be positive, got {s}")
        w = (np.arange(1, num_adapters + 1, dtype=np.float64)) ** (-s)
        return rng.choice(num_adapters, size=length, p=w / w.sum()).astype(np.int64)

    if kind == "bursty":
        mean_run = float(params.get("mean_run", 32))
        if mean_run < 1:
            raise ConfigError(f"mean run length must be >= 1, got {mean_run}")
        out = np.empty(length, dtype=np.int64)
        pos = 0
        while pos < length:
            run = int(rng.geometric(1.0 / mean_run))
            out[pos:pos + run] = int(rng.integers(0, num_adapters))
            pos += run
        return out

    # adversarial
    if "capacity" not in params:
        raise ConfigError("adversarial workload needs params['capacity']")
    capacity = int(params["capacity"])
    if capacity < 1:
        raise ConfigError("capacity must be positive")
    period = capacity + 1
    if period > num_adapters:
        raise ConfigError(
            f"adversarial cycle needs {period} adapters, only {num_adapters} exist"
        )
    return (np.arange(length, dtype=np.int64) % period)


@dataclass
class CostModel:
    """Additive per-step latency model.

    latency = forward_passes * n * pass_cost_per_token
            + misses * paging_penalty
            + launches * launch_overhead
    graph_mode collapses the step's launch count to 1.
    """

    pass_cost_per_token: float
    paging_penalty: float
    launch_overhead: float
    graph_mode: bool = False

    def __post_init__(self):
        for name in ("pass_cost_per_token", "paging_penalty", "launch_overhead"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")


@dataclass(frozen=True)
class LatencyStats:
    """Per-run latency summary over serving steps."""

    p50: float
    p99: float
    mean: float
    miss_rate: float


def _percentile(sorted_vals, q):
    # nearest-rank on an ascending array, deterministic
    n = len(sorted_vals)
    rank = max(int(np.ceil(q / 100.0 * n)), 1)
    return float(sorted_vals[rank - 1])


@dataclass
class StepStructure:
    """Fixed per-step shape: batch size, adapters consumed per step,
    and the launch decomposition for each serving mode."""

    n: int
    adapters_per_step: int
    launches_per_pass: int = 12   # kernels one unbatched pass issues
    launch_base: int = 4          # fixed kernels around the grouped path

    def __post_init__(self):
        if self.n < 1 or self.adapters_per_step < 1:
            raise ConfigError("batch shape counts must be positive")
        if self.launches_per_pass < 1 or self.launch_base < 0:
            raise ConfigError("launch decomposition counts out of range")


def step_latency(mode, structure, cost, misses):
    """Latency of one serving step under the additive model."""
    k = structure.adapters_per_step
    if mode.startswith("per-seq"):
        passes = k
        launches = k * structure.launches_per_pass
    else:
        passes = 1
        launches = structure.launch_base + k
    if cost.graph_mode or mode == "per-token+graph":
        launches = 1
    return (
        passes * structure.n * cost.pass_cost_per_token
        + misses * cost.paging_penalty
        + launches * cost.launch_overhead
    )


def simulate_serving(workload, routing_mode, cost, structure,
                     capacity=None, slots=None, num_adapters=None):
    """Serve a workload step by step and summarize latency.

    Each step consumes `structure.adapters_per_step` accesses from the
    workload (the adapters that step's batch requests). Paging modes
    run every access through the LRU pager and pay the penalty per
    miss; hot-set modes look adapters up in the slot table, count
    not-resident outcomes, and queue asynchronous fills that never add
    latency to the step itself.
    """
    if routing_mode not in ROUTING_MODES:
        raise ConfigError(f"unknown routing mode {routing_mode!r}")
    workload = np.asarray(workload, dtype=np.int64)
    if num_adapters is None:
        num_adapters = int(workload.max()) + 1
    k = structure.adapters_per_step
    steps = len(workload) // k
    if steps < 1:
        raise ConfigError("workload shorter than one step")

    paging = routing_mode == "per-seq+paging"
    if paging:
        state = PagerState(capacity if capacity is not None else num_adapters)
    else:
        table = SlotTable(slots if slots is not None else num_adapters)
        table.prefill(range(min(table.slots, num_adapters)))
        next_victim = 0

    latencies = np.empty(steps, dtype=np.float64)
    total_misses = 0
    for step in range(steps):
        requested = workload[step * k:(step + 1) * k]
        misses = 0
        if paging:
            for a in requested:
                outcome, _ = pager_access(state, a)
                misses += outcome == "miss"
        else:
            for a in requested:
                if hotset_access(table, a) is None:
                    misses += 1
                    # async refill: replace a slot off the critical path
                    table.queue_update(next_victim, int(a))
                    next_victim = (next_victim + 1) % table.slots
            hotset_misses = misses
            misses = 0  # not-resident never stalls the step
        latencies[step] = step_latency(routing_mode, structure, cost, misses)
        total_misses += misses if paging else hotset_misses
        if not paging:
            table.apply_pending()

    latencies.sort()
    return LatencyStats(
        p50=_percentile(latencies, 50),
        p99=_percentile(latencies, 99),
        mean=float(latencies.mean()),
        miss_rate=total_misses / (steps * k),
    )


def measure_miss_rate(workload, capacity, adapters_per_step):
    """Mean LRU misses per step for a workload, independent of costs."""
    workload = np.asarray(workload, dtype=np.int64)
    steps = len(workload) // adapters_per_step
    state = PagerState(capacity)
    for a in workload[: steps * adapters_per_step]:
        pager_access(state, a)
    return state.misses / steps
