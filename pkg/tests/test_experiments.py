import json
import os

import numpy as np
import pytest

from goodweights.experiments import (ExperimentConfig, RealizationError,
                                     run_experiment, write_outputs)
from goodweights.experiments import kinds, runner


def micro_cfg(**over):
    base = dict(kind="pg_sweep", master_seed=404, realizations=2, n_train=800,
                n_valid=200, d_r=32, horizon_steps=200, p_g_list=[0.0, 1.0])
    base.update(over)
    return ExperimentConfig(**base)


def test_config_json_roundtrip():
    cfg = micro_cfg()
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg


def test_config_rejects_unknown_fields():
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(json.dumps({"kind": "pg_sweep", "nope": 1}))


def test_config_rejects_unknown_kind():
    with pytest.raises(ValueError):
        ExperimentConfig(kind="mystery")


def test_records_match_requested_class_counts():
    res = run_experiment(micro_cfg())
    for rec in res.records:
        n_good = round(rec["p_g"] * rec["d_r"])
        assert rec["n_good"] == n_good
        assert rec["n_mixed"] == 0
        bad = rec["d_r"] - n_good
        assert rec["n_linear"] == bad // 2
        assert rec["n_saturated"] == bad - bad // 2


def test_rerun_is_byte_identical(tmp_path):
    paths = []
    for i, workers in enumerate((1, 2)):
        out = tmp_path / f"run{i}"
        write_outputs(run_experiment(micro_cfg(), workers=workers), out)
        paths.append(out / "results.csv")
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_single_task_reproducible_in_isolation():
    import dataclasses
    cfg = micro_cfg()
    res = run_experiment(cfg)
    tasks = kinds.build_tasks(cfg)
    _, records, _ = kinds.run_task(dataclasses.asdict(cfg), tasks[3])
    want = [r for r in res.records if r["task"] == 3]
    assert records == want


def test_summary_matches_streaming_recompute():
    """Welford pass over the records equals the emitted mean/std."""
    res = run_experiment(micro_cfg(realizations=5))
    for cell in res.summary["cells"]:
        group = [r for r in res.records
                 if r["d_r"] == cell["d_r"] and r["p_g"] == cell["p_g"]]
        count, mean, m2 = 0, 0.0, 0.0
        for rec in group:
            count += 1
            delta = rec["tau_f"] - mean
            mean += delta / count
            m2 += delta * (rec["tau_f"] - mean)
        assert abs(mean - cell["mean_tau_f"]) < 1e-12
        assert abs(np.sqrt(m2 / count) - cell["std_tau_f"]) < 1e-12


def test_heatmap_uses_uniform_draws(tmp_path):
    cfg = micro_cfg(kind="heatmap", grid=2, data_mode="shared",
                    p_g_list=None, realizations=2)
    res = run_experiment(cfg)
    assert len(res.records) == 2 * 2 * 2
    ws = sorted({r["w"] for r in res.records})
    assert ws == [0.2, 0.4]
    out = tmp_path / "hm"
    write_outputs(res, out)
    assert (out / "heatmap.svg").exists()


def test_sampler_compare_cells():
    cfg = micro_cfg(kind="sampler_compare", p_g_list=None, realizations=2)
    res = run_experiment(cfg)
    algs = {r["algorithm"] for r in res.records}
    assert algs == {"standard", "one-shot"}
    assert {c["algorithm"] for c in res.summary["cells"]} == algs


def test_effective_dim_cells_override():
    cfg = micro_cfg(kind="effective_dim", p_g_list=None,
                    cells=[{"d_r": 16, "p_g": 1.0, "bad_mix": "balanced"},
                           {"d_r": 32, "p_g": 0.5, "bad_mix": "all-linear"}])
    res = run_experiment(cfg)
    assert len(res.records) == 4
    recs32 = [r for r in res.records if r["d_r"] == 32]
    assert all(r["n_linear"] == 16 and r["n_saturated"] == 0 for r in recs32)


def test_beta_sweep_best_beta():
    cfg = micro_cfg(kind="beta_sweep", p_g_list=[1.0],
                    beta_list=[1e-6, 1e-4], realizations=2)
    res = run_experiment(cfg)
    assert len(res.summary["best_beta_per_pg"]) == 1
    assert res.summary["best_beta_per_pg"][0]["beta"] in (1e-6, 1e-4)


def test_wnorm_scaling_slope_present():
    cfg = micro_cfg(kind="wnorm_scaling", p_g_list=[1.0],
                    d_r_list=[16, 32], realizations=2)
    res = run_experiment(cfg)
    assert "wnorm_loglog_slope" in res.summary


def test_suppression_records_and_columns(tmp_path):
    cfg = micro_cfg(kind="suppression", p_g_list=None, realizations=1,
                    d_r=20, suppression_checkpoints=[5, 10])
    res = run_experiment(cfg)
    assert [r["n_good"] for r in res.records] == list(range(1, 11))
    cols = res.extras["columns"]
    assert len(cols) == 2 * 20
    at5 = [c for c in cols if c["n_good"] == 5]
    assert sum(c["class"] == "good" for c in at5) == 5
    assert all(0.0 <= c["normalized_supnorm"] <= 1.0 for c in cols)
    out = tmp_path / "sup"
    write_outputs(res, out)
    assert (out / "columns.csv").exists()
    assert (out / "suppression.svg").exists()


def test_invariant_measure_micro(tmp_path):
    cfg = micro_cfg(kind="invariant_measure", p_g_list=None, realizations=1,
                    n_seeds=1, d_r=32, total_time=30.0, burn_in=5.0, bins=24)
    res = run_experiment(cfg)
    assert len(res.records) == 6  # 2 models x 3 coordinates
    models = {r["model"] for r in res.records}
    assert models == {"pg1", "pg0"}
    assert all(0.0 <= r["l1_distance"] <= 2.0 for r in res.records)
    out = tmp_path / "inv"
    write_outputs(res, out)
    assert (out / "histograms.csv").exists()


def test_nn_compare_micro(tmp_path):
    cfg = micro_cfg(kind="nn_compare", p_g_list=None, realizations=2, d_r=16,
                    nn_steps=120, nn_checkpoint_every=60,
                    nn_valid_trajectories=2, horizon_steps=150)
    res = run_experiment(cfg, workers=2)
    nn = [r for r in res.records if r["model"] == "nn"]
    rfm = [r for r in res.records if r["model"] == "rfm"]
    assert [r["step"] for r in nn] == [0, 60, 120]
    assert len(rfm) == 2
    assert all(np.isfinite(r["mean_tau_f"]) for r in rfm)
    out = tmp_path / "nn"
    write_outputs(res, out)
    assert (out / "nn_compare.svg").exists()


def test_keep_going_collects_errors():
    bad = micro_cfg(kind="invariant_measure", p_g_list=None, n_seeds=2,
                    total_time=10.0, burn_in=40.0)  # total < burn-in
    with pytest.raises(RealizationError):
        run_experiment(bad)
    res = run_experiment(bad, keep_going=True)
    assert len(res.errors) == 2 and res.records == []


def test_kind_runners_force_their_kind():
    from goodweights.experiments import run_sampler_compare
    res = run_sampler_compare(micro_cfg(realizations=1, p_g_list=None))
    assert res.config.kind == "sampler_compare"
    assert {r["algorithm"] for r in res.records} == {"standard", "one-shot"}


def test_write_outputs_inventory(tmp_path):
    res = run_experiment(micro_cfg())
    out = tmp_path / "outs"
    write_outputs(res, out)
    names = set(os.listdir(out))
    assert {"results.csv", "summary.json", "config.json"} <= names
    header = (out / "results.csv").read_text().splitlines()[0]
    assert header.startswith("kind,task,realization")
