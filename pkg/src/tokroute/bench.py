"""Experiment harness behind the CLI.

Each runner loads a JSON config (schema_version 1, unknown keys
rejected), executes a seeded experiment, writes CSV reports into an
output directory, and prints a short summary. Every CSV row carries a
paper_anchor column naming the published table or figure the row
corresponds to. Identical (config, seed) always produces byte-identical
CSV bytes.
"""

import json
from pathlib import Path

import numpy as np

from . import compute, dispatch, memory, molora
from .catalog import AdapterCatalog, LoraPair, random_catalog
from .errors import CheckFailure, ConfigError
from .linalg import DTYPE, frobenius_rel_err
from .memory import CostModel, StepStructure
from .molora import TrainConfig, init_router, make_cluster_task, make_labeled_task
from .routing import TokenBatch, VocabBreaks, route_batch_vocab

SCHEMA_VERSION = 1


def load_config(path, allowed, required=()):
    """Parse and validate a JSON experiment config."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    unknown = sorted(set(raw) - set(allowed) - {"schema_version"})
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(set(required) - set(raw))
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    if "seed" in raw and not isinstance(raw["seed"], int):
        raise ConfigError("seed must be an integer")
    return raw


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _out_dir(out):
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# equivalence
# ---------------------------------------------------------------------------

EQUIVALENCE_SCENARIOS = ("single", "interleaved", "text_heavy", "separated")


def _make_scenario_batch(scenario, n, d, num_targets, num_seqs, rng):
    """Token batch plus vocab breaks realizing one workload scenario."""
    vocab = 65536
    edges = np.linspace(0, vocab, num_targets + 1).astype(np.int64)
    breaks = VocabBreaks(edges)
    seq_ids = np.sort(rng.integers(0, num_seqs, size=n))

    if scenario == "single":
        ranges = np.zeros(n, dtype=np.int64)
    elif scenario == "interleaved":
        ranges = rng.integers(0, num_targets, size=n)
    elif scenario == "text_heavy":
        ranges = np.where(rng.random(n) < 0.9, 0,
                          rng.integers(1, max(num_targets, 2), size=n))
        ranges = np.minimum(ranges, num_targets - 1)
    elif scenario == "separated":
        ranges = seq_ids % num_targets
    else:
        raise ConfigError(f"unknown scenario {scenario!r}")

    lo = edges[ranges]
    hi = edges[ranges + 1]
    vocab_ids = lo + rng.integers(0, hi - lo, size=n)
    features = rng.normal(0.0, 1.0, (n, d)).astype(DTYPE)
    batch = TokenBatch(vocab_ids=vocab_ids, seq_ids=seq_ids,
                       adapter_ids=np.zeros(n, dtype=np.int64), features=features)
    return batch, breaks


def run_equivalence(config_path, out_dir):
    """Check the three compute paths agree and report their work."""
    cfg = load_config(config_path, allowed={
        "seed", "n", "d", "r", "num_targets", "num_seqs", "scenarios", "base_term",
    })
    seed = cfg.get("seed", 0)
    n = cfg.get("n", 2048)
    d = cfg.get("d", 64)
    r = cfg.get("r", 8)
    num_targets = cfg.get("num_targets", 4)
    num_seqs = cfg.get("num_seqs", 8)
    scenarios = cfg.get("scenarios", list(EQUIVALENCE_SCENARIOS))
    use_base = cfg.get("base_term", False)
    for s in scenarios:
        if s not in EQUIVALENCE_SCENARIOS:
            raise ConfigError(f"unknown scenario {s!r}")

    out = _out_dir(out_dir)
    rows = []
    worst = 0.0
    for scenario in scenarios:
        rng = np.random.default_rng([seed, EQUIVALENCE_SCENARIOS.index(scenario)])
        batch, breaks = _make_scenario_batch(scenario, n, d, num_targets, num_seqs, rng)
        decision = route_batch_vocab(batch, breaks)
        catalog = random_catalog(1, num_targets, d, r, rng)
        base_w = (rng.normal(0.0, 1.0, (d, d)) / np.sqrt(d)).astype(DTYPE) if use_base else None

        out_tok, rep_tok = compute.lora_forward_per_token(batch, decision, catalog, base_w)
        ref = compute.lora_forward_reference(batch, decision, catalog, base_w)
        seq_needed = compute.seq_needed_from_decision(batch, decision)
        out_seq, rep_seq = compute.per_sequence_simulate(batch, decision, seq_needed,
                                                        catalog, base_w)
        err_ref = frobenius_rel_err(out_tok, ref)
        err_seq = frobenius_rel_err(out_seq, ref)
        worst = max(worst, err_ref, err_seq)
        if err_ref > 1e-5 or err_seq > 1e-5:
            raise CheckFailure(
                f"equivalence failed on {scenario}: per-token vs reference "
                f"{err_ref:.3e}, per-sequence vs reference {err_seq:.3e}"
            )

        counted = compute.count_work(decision, seq_ids=batch.seq_ids,
                                     seq_needed=seq_needed)
        anchor = "table4" if scenario == "interleaved" else "table5"
        rows.append((scenario, seed, n, d, r, num_targets,
                     err_ref, err_seq,
                     rep_seq.forward_passes, rep_tok.forward_passes,
                     rep_seq.token_passes, rep_tok.token_passes,
                     counted.token_passes,
                     rep_seq.forward_passes / rep_tok.forward_passes,
                     rep_seq.token_passes / rep_tok.token_passes,
                     anchor))

    _write_csv(out / "equivalence.csv",
               ("scenario", "seed", "n", "d", "r", "num_targets",
                "rel_err_per_token", "rel_err_per_seq",
                "fp_per_seq", "fp_per_token", "tp_per_seq", "tp_per_token",
                "tp_per_seq_batched", "pass_ratio", "token_pass_ratio",
                "paper_anchor"),
               rows)
    print(f"equivalence: {len(rows)} scenarios agree within 1e-5 "
          f"(worst relative error {worst:.3e})")
    for row in rows:
        print(f"  {row[0]:<12} passes {row[8]} vs {row[9]}, "
              f"token-passes {row[10]} vs {row[11]} (ratio {row[14]:.2f})")
    return rows


# ---------------------------------------------------------------------------
# memory simulation
# ---------------------------------------------------------------------------

LADDER_MODES = ("per-seq+paging", "per-seq+hotset", "per-token+hotset", "per-token+graph")


def _resolve_costs(cfg, structure, num_adapters, capacity, seed, length):
    """Cost constants from explicit values or calibration targets.

    Calibration solves pass and launch constants exactly from the two
    hot-set latency targets, then fits the paging penalty so the mean
    paged latency exceeds the unpaged by the target ratio on the
    ladder's own uniform workload (making that ratio exact by
    construction; the fit is a consistency check, not a prediction).
    """
    explicit = cfg.get("costs")
    if explicit is not None:
        allowed = {"pass_cost_per_token", "paging_penalty", "launch_overhead"}
        unknown = sorted(set(explicit) - allowed)
        if unknown:
            raise ConfigError(f"unknown cost keys: {', '.join(unknown)}")
        return CostModel(
            pass_cost_per_token=float(explicit.get("pass_cost_per_token", 0.0)),
            paging_penalty=float(explicit.get("paging_penalty", 0.0)),
            launch_overhead=float(explicit.get("launch_overhead", 0.0)),
        ), None

    cal = dict(cfg.get("calibration", {}))
    per_seq_target = float(cal.pop("per_seq_hotset", 5.88))
    per_tok_target = float(cal.pop("per_token_hotset", 1.43))
    paging_ratio = float(cal.pop("paging_over_hotset", 1.3))
    if cal:
        raise ConfigError(f"unknown calibration keys: {', '.join(sorted(cal))}")

    k = structure.adapters_per_step
    # per-seq+hotset: k*a + k*lpp*h ; per-token+hotset: a + (base+k)*h
    lpp = structure.launches_per_pass
    base = structure.launch_base
    m = np.array([[k, k * lpp], [1.0, base + k]])
    a, h = np.linalg.solve(m, np.array([per_seq_target, per_tok_target]))
    if a <= 0 or h < 0:
        raise ConfigError("calibration targets are infeasible for this step shape")

    fit_workload = memory.gen_workload("uniform", num_adapters, length, [seed, 0])
    miss_per_step = memory.measure_miss_rate(fit_workload, capacity, k)
    if miss_per_step == 0:
        raise ConfigError("calibration workload produces no misses to fit against")
    penalty = (paging_ratio - 1.0) * per_seq_target / miss_per_step
    cost = CostModel(pass_cost_per_token=a / structure.n,
                     paging_penalty=penalty, launch_overhead=h)
    return cost, {"pass_cost": a, "launch_overhead": h, "penalty": penalty,
                  "miss_per_step": miss_per_step}


def run_memory_sim(config_path, out_dir):
    """Latency stats for all workloads x modes, plus the speedup ladder."""
    cfg = load_config(config_path, allowed={
        "seed", "num_seeds", "num_adapters", "capacity", "slots", "steps",
        "n", "adapters_per_step", "launches_per_pass", "launch_base",
        "zipf_s", "mean_run", "workloads", "costs", "calibration",
    })
    seed = cfg.get("seed", 0)
    num_seeds = cfg.get("num_seeds", 10)
    num_adapters = cfg.get("num_adapters", 16)
    capacity = cfg.get("capacity", num_adapters // 2)
    slots = cfg.get("slots", num_adapters)
    steps = cfg.get("steps", 500)
    structure = StepStructure(
        n=cfg.get("n", 512),
        adapters_per_step=cfg.get("adapters_per_step", 4),
        launches_per_pass=cfg.get("launches_per_pass", 12),
        launch_base=cfg.get("launch_base", 4),
    )
    workloads = cfg.get("workloads", list(memory.WORKLOAD_KINDS))
    params_by_kind = {
        "uniform": {},
        "zipfian": {"s": cfg.get("zipf_s", 1.0)},
        "bursty": {"mean_run": cfg.get("mean_run", 32)},
        "adversarial": {"capacity": capacity},
    }
    for kind in workloads:
        if kind not in memory.WORKLOAD_KINDS:
            raise ConfigError(f"unknown workload kind {kind!r}")

    out = _out_dir(out_dir)
    length = steps * structure.adapters_per_step
    cost, fitted = _resolve_costs(cfg, structure, num_adapters, capacity, seed, length)

    rows = []
    for kind in workloads:
        for i in range(num_seeds):
            workload = memory.gen_workload(kind, num_adapters, length,
                                           [seed, i], params_by_kind[kind])
            for mode in LADDER_MODES:
                stats = memory.simulate_serving(
                    workload, mode, cost, structure,
                    capacity=capacity, slots=slots, num_adapters=num_adapters,
                )
                rows.append((f"{mode}/{kind}", seed + i, kind, mode,
                             stats.p50, stats.p99, stats.mean, stats.miss_rate,
                             "fig6"))
    _write_csv(out / "memsim.csv",
               ("scenario", "seed", "workload", "mode", "p50", "p99", "mean",
                "miss_rate", "paper_anchor"),
               rows)

    # speedup ladder on the uniform workload
    ladder_rows = []
    workload = memory.gen_workload("uniform", num_adapters, length, [seed, 0])
    means = []
    for mode in LADDER_MODES:
        stats = memory.simulate_serving(workload, mode, cost, structure,
                                        capacity=capacity, slots=slots,
                                        num_adapters=num_adapters)
        means.append(stats.mean)
    for i, mode in enumerate(LADDER_MODES):
        step_ratio = means[i - 1] / means[i] if i else 1.0
        ladder_rows.append((mode, seed, means[i], means[0] / means[i],
                            step_ratio, "table6"))
    _write_csv(out / "ladder.csv",
               ("scenario", "seed", "mean_latency", "cumulative_speedup",
                "step_speedup", "paper_anchor"),
               ladder_rows)

    if fitted:
        print(f"memsim: calibrated pass_cost={fitted['pass_cost']:.6g} "
              f"launch_overhead={fitted['launch_overhead']:.6g} "
              f"paging_penalty={fitted['penalty']:.6g} "
              f"(uniform misses/step {fitted['miss_per_step']:.4g})")
    print("memsim: mean latency ladder "
          + " -> ".join(f"{mode} {m:.4g}" for mode, m in zip(LADDER_MODES, means)))
    print("memsim: step speedups "
          + ", ".join(f"{r[4]:.4g}x" for r in ladder_rows[1:]))
    return rows, ladder_rows


# ---------------------------------------------------------------------------
# molora training
# ---------------------------------------------------------------------------

MOLORA_TASKS = ("multimodal", "domains", "labeled")


def _train_variant(task, mode, num_adapters, k, cfg, seed, tuning):
    params = init_router(task.d, num_adapters, hidden=cfg.get("hidden", 64),
                         k=k, aux_weight=tuning["aux_weight"], seed=seed)
    rng = np.random.default_rng([seed, 17])
    adapters = None
    if task.targets is not None:
        adapters = [
            LoraPair(rng.normal(0.0, 0.1, (task.d, cfg.get("r", 4))),
                     rng.normal(0.0, 0.1, (cfg.get("r", 4), task.d)))
            for _ in range(num_adapters)
        ]
    train_cfg = TrainConfig(epochs=tuning["epochs"], lr=tuning["lr"],
                            seed=seed, routing_mode=mode,
                            batch_size=tuning["batch_size"])
    params, history = molora.train_router(task, params, train_cfg, adapters)
    return params, adapters, history


# Per-task training defaults; any of them can be overridden in the config.
_MOLORA_TUNING = {
    "multimodal": {"epochs": 100, "lr": 0.5, "aux_weight": 0.005,
                   "batch_size": 125, "sep": 3.0, "noise": 1.0,
                   "per_modality": 500, "num_adapters": 4},
    "domains": {"epochs": 200, "lr": 1.0, "aux_weight": 0.02,
                "batch_size": 50, "sep": 8.0, "noise": 0.3,
                "per_modality": 200, "num_adapters": None},
    "labeled": {"epochs": 100, "lr": 0.5, "aux_weight": 0.01,
                "batch_size": 125, "sep": 4.0, "noise": 1.0,
                "per_modality": 500, "num_adapters": None},
}


def run_molora(config_path, out_dir):
    """Train the gated mixture per config; write history and confusion."""
    cfg = load_config(config_path, allowed={
        "seed", "task", "num_modalities", "per_modality", "d", "r",
        "num_adapters", "k", "hidden", "epochs", "lr", "aux_weight",
        "batch_size", "sep", "noise", "compare",
    })
    seed = cfg.get("seed", 0)
    kind = cfg.get("task", "multimodal")
    if kind not in MOLORA_TASKS:
        raise ConfigError(f"unknown task {kind!r}")
    tuning = dict(_MOLORA_TUNING[kind])
    tuning.update((key, cfg[key]) for key in tuning if key in cfg)
    modalities = cfg.get("num_modalities", 3)
    per = tuning["per_modality"]
    d = cfg.get("d", 32)
    out = _out_dir(out_dir)

    if kind == "labeled":
        task = make_labeled_task(modalities, per, d, seed=seed,
                                 sep=tuning["sep"], noise=tuning["noise"])
        num_adapters = tuning["num_adapters"] or modalities
        params, _, history = _train_variant(task, "learned", num_adapters,
                                            cfg.get("k", 2), cfg, seed, tuning)
        variants = {"learned": history}
        anchor = "appF8"
        final_sel = np.argmax(
            molora.router_forward(task.features, params), axis=1)
    else:
        task = make_cluster_task(modalities, per, d, seed=seed,
                                 sep=tuning["sep"], noise=tuning["noise"],
                                 rank=cfg.get("r", 4))
        anchor = "appF4" if kind == "multimodal" else "appF5"
        num_adapters = tuning["num_adapters"] or modalities

        variants = {}
        if cfg.get("compare", kind == "multimodal"):
            _, _, variants["single"] = _train_variant(task, "single", 1, 1, cfg,
                                                      seed, tuning)
            _, _, variants["oracle"] = _train_variant(task, "oracle", modalities,
                                                      1, cfg, seed, tuning)
        params, adapters, history = _train_variant(task, "learned", num_adapters,
                                                   cfg.get("k", 2), cfg, seed,
                                                   tuning)
        variants["learned"] = history
        molora.save_router(out / "router.bin", params)
        trained = AdapterCatalog(num_adapters, 1, task.d, adapters[0].r)
        for j, pair in enumerate(adapters):
            trained.set_pair(j, 0, pair)
        trained.save(out / "adapters.bin")
        _, _, info = molora.evaluate(task, params, adapters)
        final_sel = info["selections"]

    history_rows = []
    for name, hist in variants.items():
        for rec in hist.records:
            history_rows.append((name, seed, rec.epoch, rec.task_loss, rec.aux_loss,
                                 rec.ari, rec.nmi, rec.entropy,
                                 anchor if name == "learned" else "appF3"))
    _write_csv(out / "history.csv",
               ("scenario", "seed", "epoch", "task_loss", "aux_loss", "ari", "nmi",
                "entropy", "paper_anchor"),
               history_rows)

    conf = molora.confusion(task.labels, final_sel, num_targets=num_adapters)
    conf_rows = [(f"class{i}", seed) + tuple(conf[i]) + (anchor,)
                 for i in range(conf.shape[0])]
    _write_csv(out / "confusion.csv",
               ("scenario", "seed") + tuple(f"adapter{j}" for j in range(conf.shape[1]))
               + ("paper_anchor",),
               conf_rows)

    summary_rows = [(name, seed, hist.records[-1].task_loss, hist.records[-1].ari,
                     hist.records[-1].nmi, hist.records[-1].entropy, "appF3")
                    for name, hist in variants.items()]
    _write_csv(out / "summary.csv",
               ("scenario", "seed", "final_task_loss", "final_ari", "final_nmi",
                "final_entropy", "paper_anchor"),
               summary_rows)

    for name, hist in variants.items():
        last = hist.records[-1]
        print(f"molora[{kind}] {name:<8} final task loss {last.task_loss:.4f} "
              f"ari {last.ari:.3f} nmi {last.nmi:.3f} entropy {last.entropy:.3f}")
    return variants


# ---------------------------------------------------------------------------
# dispatch cost bench
# ---------------------------------------------------------------------------

DISPATCH_DISTRIBUTIONS = ("uniform", "skewed", "extreme")
FIXED_TILES = (64, 64)


def proportions_to_counts(props, n):
    """Largest-remainder rounding of proportions to integer counts."""
    props = np.asarray(props, dtype=np.float64)
    if props.min() < 0 or not np.isclose(props.sum(), 1.0):
        raise ConfigError("proportions must be non-negative and sum to 1")
    raw = props * n
    counts = np.floor(raw).astype(np.int64)
    short = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def tiled_cost(counts, d, tiles, unit=1.0):
    """Modeled grouped-matmul cost: padded tile area times unit cost."""
    total = 0.0
    for h, (bm, bn) in zip(counts, tiles):
        if h == 0:
            continue
        total += np.ceil(h / bm) * np.ceil(d / bn) * bm * bn * unit
    return float(total)


def _distribution_props(name, c):
    if name == "uniform":
        return np.full(c, 1.0 / c)
    if name == "skewed":
        w = 0.5 ** np.arange(c)
        return w / w.sum()
    if name == "extreme":
        if c == 4:
            return np.array([0.95, 0.02, 0.02, 0.01])
        rest = 0.05 / (c - 1)
        return np.array([0.95] + [rest] * (c - 1))
    raise ConfigError(f"unknown distribution {name!r}")


def run_dispatch_bench(config_path, out_dir):
    """Adaptive vs fixed tiling cost across group-size distributions."""
    cfg = load_config(config_path, allowed={
        "seed", "n", "d", "num_targets", "distributions", "tile_unit_cost",
    })
    seed = cfg.get("seed", 0)
    n = cfg.get("n", 256)
    d = cfg.get("d", 128)
    c = cfg.get("num_targets", 4)
    unit = cfg.get("tile_unit_cost", 1.0)
    distributions = cfg.get("distributions", list(DISPATCH_DISTRIBUTIONS))

    out = _out_dir(out_dir)
    rows = []
    for name in distributions:
        counts = proportions_to_counts(_distribution_props(name, c), n)
        adaptive = tiled_cost(counts, d, [dispatch.select_tiles(h) for h in counts],
                              unit)
        fixed = tiled_cost(counts, d, [FIXED_TILES] * c, unit)
        rows.append((name, seed, "/".join(str(int(x)) for x in counts),
                     fixed, adaptive, fixed / adaptive, "table9"))
    _write_csv(out / "dispatch.csv",
               ("scenario", "seed", "group_sizes", "fixed_cost", "adaptive_cost",
                "fixed_over_adaptive", "paper_anchor"),
               rows)
    for row in rows:
        print(f"dispatch[{row[0]:<8}] sizes {row[2]:<14} fixed {row[3]:.0f} "
              f"adaptive {row[4]:.0f} ratio {row[5]:.3f}")
    return rows
