"""Serve four workloads four ways and climb the latency ladder.

Adapter weights live either behind an LRU pager (misses stall the
step) or in a pre-allocated hot set whose slot table is refreshed
asynchronously (misses never stall). Crossed with per-sequence vs
per-token execution and a graph-captured launch path, that gives the
four serving modes costed here with a transparent additive model:

    latency = passes * n * pass_cost + misses * penalty + launches * overhead

The pass and launch constants are solved from two hot-set latency
targets; the penalty is fitted so paging exceeds the unpaged baseline
by a chosen ratio on the calibration workload.

Run:  python3 demos/03_memory_ladder.py
"""

import numpy as np

from tokroute import (
    CostModel,
    StepStructure,
    gen_workload,
    measure_miss_rate,
    simulate_serving,
)

MODES = ("per-seq+paging", "per-seq+hotset", "per-token+hotset",
         "per-token+graph")

num_adapters, capacity = 16, 8
structure = StepStructure(n=512, adapters_per_step=4)

# Workload shapes: how steps pick their adapters.
workloads = {
    "uniform": gen_workload("uniform", num_adapters, 2000, [0, 0]),
    "zipfian": gen_workload("zipfian", num_adapters, 2000, [0, 1], {"s": 1.0}),
    "bursty": gen_workload("bursty", num_adapters, 2000, [0, 2],
                           {"mean_run": 32}),
    "adversarial": gen_workload("adversarial", num_adapters, 2000, [0, 3],
                                {"capacity": capacity}),
}
print(f"LRU misses per step at capacity {capacity} of {num_adapters}:")
for kind, w in workloads.items():
    rate = measure_miss_rate(w, capacity, structure.adapters_per_step)
    print(f"  {kind:<12} {rate:.3f}")

# Solve pass/launch constants from two latency targets, fit the
# penalty to a 1.3x paging-over-hotset ratio on the uniform workload.
per_seq_target, per_tok_target, paging_ratio = 5.88, 1.43, 1.3
k, lpp, base = (structure.adapters_per_step, structure.launches_per_pass,
                structure.launch_base)
a, h = np.linalg.solve(np.array([[k, k * lpp], [1.0, base + k]]),
                       np.array([per_seq_target, per_tok_target]))
miss = measure_miss_rate(workloads["uniform"], capacity, k)
penalty = (paging_ratio - 1.0) * per_seq_target / miss
cost = CostModel(pass_cost_per_token=a / structure.n, paging_penalty=penalty,
                 launch_overhead=h)
print(f"\ncalibrated: pass cost {a:.3f}/batch, launch overhead {h:.3f}, "
      f"miss penalty {penalty:.3f}")

print("\nmean latency (ms-equivalents) by workload and mode:")
header = "  {:<12}".format("") + "".join(f"{m:>18}" for m in MODES)
print(header)
for kind, w in workloads.items():
    stats = [simulate_serving(w, m, cost, structure, capacity=capacity,
                              slots=num_adapters, num_adapters=num_adapters)
             for m in MODES]
    print("  {:<12}".format(kind)
          + "".join(f"{s.mean:>18.3f}" for s in stats))

print("\nnote the hot-set columns repeat one number: with misses handled "
      "asynchronously, latency is fixed by the step structure alone.")

uni = [simulate_serving(workloads["uniform"], m, cost, structure,
                        capacity=capacity, slots=num_adapters,
                        num_adapters=num_adapters).mean for m in MODES]
print("\nthe ladder on the uniform workload:")
prev = None
for mode, mean in zip(MODES, uni):
    step = "" if prev is None else f"  ({prev / mean:.2f}x over the previous)"
    print(f"  {mode:<18} {mean:>7.3f}{step}")
    prev = mean
print(f"  end to end: {uni[0] / uni[-1]:.1f}x")
