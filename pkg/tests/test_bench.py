"""Experiment runners and the command-line front end."""

import json

import numpy as np
import pytest

from tokroute import bench, cli
from tokroute.catalog import AdapterCatalog
from tokroute.errors import CheckFailure, ConfigError
from tokroute.molora import load_router


def write_config(tmp_path, name="cfg.json", **entries):
    entries.setdefault("schema_version", 1)
    path = tmp_path / name
    path.write_text(json.dumps(entries))
    return path


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------

def test_load_config_accepts_known_keys(tmp_path):
    path = write_config(tmp_path, seed=3, n=10)
    cfg = bench.load_config(path, allowed={"seed", "n"})
    assert cfg["seed"] == 3 and cfg["n"] == 10


def test_load_config_rejects_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        bench.load_config(tmp_path / "nope.json", allowed=set())


def test_load_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        bench.load_config(path, allowed=set())


def test_load_config_rejects_non_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        bench.load_config(path, allowed=set())


def test_load_config_rejects_wrong_schema_version(tmp_path):
    path = write_config(tmp_path, schema_version=2)
    with pytest.raises(ConfigError) as err:
        bench.load_config(path, allowed=set())
    assert "schema_version" in str(err.value)


def test_load_config_rejects_unknown_keys(tmp_path):
    path = write_config(tmp_path, seed=0, typo_key=1)
    with pytest.raises(ConfigError) as err:
        bench.load_config(path, allowed={"seed"})
    assert "typo_key" in str(err.value)


def test_load_config_enforces_required_keys(tmp_path):
    path = write_config(tmp_path, seed=0)
    with pytest.raises(ConfigError) as err:
        bench.load_config(path, allowed={"seed", "task"}, required={"task"})
    assert "task" in str(err.value)


def test_load_config_rejects_non_integer_seed(tmp_path):
    path = write_config(tmp_path, seed="zero")
    with pytest.raises(ConfigError):
        bench.load_config(path, allowed={"seed"})


# ---------------------------------------------------------------------------
# tiling model helpers
# ---------------------------------------------------------------------------

def test_proportions_to_counts_extreme_split():
    counts = bench.proportions_to_counts([0.95, 0.02, 0.02, 0.01], 256)
    assert counts.tolist() == [243, 5, 5, 3]
    assert counts.sum() == 256


def test_proportions_to_counts_uniform_and_validation():
    assert bench.proportions_to_counts([0.25] * 4, 256).tolist() == [64] * 4
    with pytest.raises(ConfigError):
        bench.proportions_to_counts([0.5, 0.6], 10)
    with pytest.raises(ConfigError):
        bench.proportions_to_counts([-0.1, 1.1], 10)


def test_tiled_cost_pads_to_tile_boundaries():
    # one group of 10 tokens, d=20, tiles 16x32: one 16-row stripe,
    # one 32-column stripe -> 512 area units
    assert bench.tiled_cost([10], 20, [(16, 32)]) == 16 * 32
    # 100 tokens with 32x32 tiles: 4 row stripes of ceil(20/32)=1 column
    assert bench.tiled_cost([100], 20, [(32, 32)]) == 4 * 32 * 32
    # empty groups cost nothing
    assert bench.tiled_cost([0, 10], 20, [(64, 64), (16, 32)]) == 16 * 32
    # unit cost scales linearly
    assert bench.tiled_cost([10], 20, [(16, 32)], unit=2.5) == 16 * 32 * 2.5


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def test_equivalence_runner_reports_pass_reduction(tmp_path):
    cfg = write_config(tmp_path, seed=0, n=64, d=8, r=2,
                       num_targets=4, num_seqs=4)
    rows = bench.run_equivalence(cfg, tmp_path / "out")
    by_name = {row[0]: row for row in rows}
    inter = by_name["interleaved"]
    assert inter[8] == 4 and inter[9] == 1      # forward passes
    assert inter[14] == pytest.approx(4.0)      # token-pass ratio
    single = by_name["single"]
    assert single[8] == single[9] == 1
    header = (tmp_path / "out" / "equivalence.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "scenario"
    assert header.split(",")[-1] == "paper_anchor"


def test_equivalence_runner_with_base_projection(tmp_path):
    cfg = write_config(tmp_path, seed=1, n=32, d=4, r=2, num_targets=2,
                       num_seqs=2, base_term=True)
    rows = bench.run_equivalence(cfg, tmp_path / "out")
    assert all(row[6] <= 1e-5 and row[7] <= 1e-5 for row in rows)


def test_memory_runner_hits_calibration_targets(tmp_path):
    cfg = write_config(tmp_path, seed=0, num_seeds=2, steps=100)
    bench.run_memory_sim(cfg, tmp_path / "out")
    lines = (tmp_path / "out" / "ladder.csv").read_text().splitlines()
    ladder = {row.split(",")[0]: row.split(",") for row in lines[1:]}
    assert float(ladder["per-seq+hotset"][2]) == pytest.approx(5.88, abs=1e-9)
    assert float(ladder["per-token+hotset"][2]) == pytest.approx(1.43, abs=1e-9)
    assert float(ladder["per-token+graph"][2]) == pytest.approx(1.36, abs=1e-9)
    paged = float(ladder["per-seq+paging"][2])
    assert paged / 5.88 == pytest.approx(1.3, abs=1e-9)


def test_memory_runner_explicit_costs_and_rows(tmp_path):
    cfg = write_config(tmp_path, seed=0, num_seeds=1, steps=50,
                       costs={"pass_cost_per_token": 0.01,
                              "paging_penalty": 1.0,
                              "launch_overhead": 0.0})
    bench.run_memory_sim(cfg, tmp_path / "out")
    lines = (tmp_path / "out" / "memsim.csv").read_text().splitlines()
    assert lines[0] == ("scenario,seed,workload,mode,p50,p99,mean,"
                       "miss_rate,paper_anchor")
    # 4 workloads x 4 modes x 1 seed
    assert len(lines) == 1 + 16


def test_memory_runner_rejects_unknown_cost_key(tmp_path):
    cfg = write_config(tmp_path, costs={"warp_cost": 1.0})
    with pytest.raises(ConfigError):
        bench.run_memory_sim(cfg, tmp_path / "out")


def test_dispatch_runner_ratios(tmp_path):
    cfg = write_config(tmp_path, seed=0)
    rows = bench.run_dispatch_bench(cfg, tmp_path / "out")
    by_name = {row[0]: row for row in rows}
    assert by_name["uniform"][5] == pytest.approx(1.0)
    assert by_name["extreme"][5] >= 1.15
    assert by_name["extreme"][2] == "243/5/5/3"


def test_molora_runner_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path, seed=0, num_modalities=2, per_modality=20,
                       d=8, r=2, num_adapters=3, epochs=3, compare=False)
    bench.run_molora(cfg, tmp_path / "out")
    out = tmp_path / "out"
    hist = (out / "history.csv").read_text().splitlines()
    assert hist[0].split(",")[-1] == "paper_anchor"
    assert len(hist) == 1 + 3  # one learned variant, three epochs
    conf = (out / "confusion.csv").read_text().splitlines()
    assert len(conf) == 1 + 2  # one row per true class
    router = load_router(out / "router.bin")
    assert router.d == 8 and router.num_adapters == 3
    catalog = AdapterCatalog.load(out / "adapters.bin")
    assert catalog.num_adapters == 3 and catalog.d == 8 and catalog.r == 2


def test_molora_runner_rejects_unknown_task(tmp_path):
    cfg = write_config(tmp_path, task="interpretive_dance")
    with pytest.raises(ConfigError):
        bench.run_molora(cfg, tmp_path / "out")


def test_runs_are_byte_identical(tmp_path):
    pairs = [
        ("equivalence", bench.run_equivalence,
         dict(seed=7, n=64, d=8, r=2, num_targets=3, num_seqs=3),
         "equivalence.csv"),
        ("memsim", bench.run_memory_sim,
         dict(seed=7, num_seeds=2, steps=60), "memsim.csv"),
        ("dispatch", bench.run_dispatch_bench, dict(seed=7), "dispatch.csv"),
        ("molora", bench.run_molora,
         dict(seed=7, num_modalities=2, per_modality=15, d=8, r=2,
              num_adapters=2, epochs=2, compare=False), "history.csv"),
    ]
    for name, runner, entries, artifact in pairs:
        cfg = write_config(tmp_path, name=f"{name}.json", **entries)
        runner(cfg, tmp_path / name / "a")
        runner(cfg, tmp_path / name / "b")
        a = (tmp_path / name / "a" / artifact).read_bytes()
        b = (tmp_path / name / "b" / artifact).read_bytes()
        assert a == b


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def test_cli_success_exit_code(tmp_path):
    cfg = write_config(tmp_path, seed=0, n=32, d=4, r=2, num_targets=2,
                       num_seqs=2)
    code = cli.main(["equivalence", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "equivalence.csv").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, seed=0, bogus=1)
    code = cli.main(["equivalence", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_cli_check_failure_exit_code(tmp_path, monkeypatch, capsys):
    def failing_runner(config_path, out_dir):
        """Stand-in runner that always fails its check."""
        raise CheckFailure("paths disagree")

    monkeypatch.setitem(cli.RUNNERS, "equivalence", failing_runner)
    cfg = write_config(tmp_path, seed=0)
    code = cli.main(["equivalence", "--config", str(cfg),
                     "--out", str(tmp_path / "out")])
    assert code == 1
    assert "check failed" in capsys.readouterr().err


def test_cli_each_subcommand_runs(tmp_path):
    configs = {
        "equivalence": dict(seed=0, n=32, d=4, r=2, num_targets=2, num_seqs=2),
        "memsim": dict(seed=0, num_seeds=1, steps=40),
        "molora": dict(seed=0, num_modalities=2, per_modality=10, d=8, r=2,
                       num_adapters=2, epochs=2, compare=False),
        "dispatch": dict(seed=0),
    }
    for sub, entries in configs.items():
        cfg = write_config(tmp_path, name=f"{sub}.json", **entries)
        code = cli.main([sub, "--config", str(cfg),
                         "--out", str(tmp_path / sub)])
        assert code == 0, sub
