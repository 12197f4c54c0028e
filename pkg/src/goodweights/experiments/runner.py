"""Experiment execution: bounded worker pool, deterministic merge, CSV and
summary emission.

Realizations are the unit of parallelism.  Results are merged by task
index, never by completion order, so reruns with the same config and
master seed produce byte-identical CSVs on the same platform and kernel
build.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from goodweights.experiments import kinds
from goodweights.experiments.config import ExperimentConfig

__all__ = ["ExperimentResult", "RealizationError", "run_experiment",
           "write_outputs", "summarize"]


class RealizationError(RuntimeError):
    def __init__(self, task: int, cause: str):
        super().__init__(f"realization task {task} failed: {cause}")
        self.task = task


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[dict]
    summary: dict
    extras: dict = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)


def _limit_blas_threads():
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(1)
    except Exception:
        pass


def _run_one(cfg_kwargs: dict, task: dict):
    try:
        return kinds.run_task(cfg_kwargs, task)
    except Exception:
        return task["task"], None, traceback.format_exc()


def run_experiment(cfg: ExperimentConfig, workers: int = 1,
                   keep_going: bool = False) -> ExperimentResult:
    """Run every task of the experiment and aggregate the records.

    A failing realization raises :class:`RealizationError` unless
    ``keep_going`` is set, in which case the failure is recorded and the
    remaining realizations still run.
    """
    import dataclasses
    cfg_kwargs = dataclasses.asdict(cfg)
    tasks = kinds.build_tasks(cfg)
    outputs = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers,
                                 initializer=_limit_blas_threads) as pool:
            chunk = max(1, len(tasks) // (8 * workers))
            outputs = list(pool.map(_run_one, [cfg_kwargs] * len(tasks), tasks,
                                    chunksize=chunk))
    else:
        outputs = [_run_one(cfg_kwargs, t) for t in tasks]

    records: list[dict] = []
    extras: dict = {}
    errors: list[str] = []
    for index, recs, extra in sorted(outputs, key=lambda o: o[0]):
        if recs is None:
            errors.append(f"task {index}:\n{extra}")
            if not keep_going:
                raise RealizationError(index, extra)
            continue
        records.extend(recs)
        for key, value in extra.items():
            extras.setdefault(key, []).extend(
                value if isinstance(value, list) else [value])
    return ExperimentResult(config=cfg, records=records,
                            summary=summarize(cfg, records), extras=extras,
                            errors=errors)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

_GROUP_KEYS = {
    "heatmap": ("w", "b"),
    "pg_sweep": ("d_r", "p_g"),
    "effective_dim": ("d_r", "p_g", "bad_mix"),
    "wnorm_scaling": ("d_r", "p_g"),
    "beta_sweep": ("beta", "p_g"),
    "sampler_compare": ("algorithm",),
    "suppression": ("n_good",),
    "invariant_measure": ("model", "coord"),
    "nn_compare": ("model",),
}

_MEAN_FIELDS = ("tau_f", "loss", "w_norm", "r_train", "r_valid",
                "l1_distance", "mean_tau_f")


def _cell_stats(group: list[dict]) -> dict:
    out = {"n": len(group)}
    for name in _MEAN_FIELDS:
        values = np.array([r[name] for r in group if name in r and r[name] is not None],
                          dtype=float)
        if values.size == 0:
            continue
        mean = float(values.mean())
        std = float(values.std(ddof=0))
        out[f"mean_{name}"] = mean
        out[f"std_{name}"] = std
        if name == "tau_f" and mean != 0.0:
            out["cv_tau_f"] = std / mean
    if any("censored" in r for r in group):
        out["censor_rate"] = float(np.mean([r.get("censored", 0) for r in group]))
    return out


def _loglog_slope(points: list[tuple[float, float]]) -> float:
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def summarize(cfg: ExperimentConfig, records: list[dict]) -> dict:
    keys = _GROUP_KEYS[cfg.kind]
    groups: dict = {}
    for rec in records:
        group_id = tuple(rec.get(k) for k in keys)
        groups.setdefault(group_id, []).append(rec)
    cells = []
    for group_id in sorted(groups, key=lambda g: tuple(str(v) for v in g)):
        entry = dict(zip(keys, group_id))
        entry.update(_cell_stats(groups[group_id]))
        cells.append(entry)
    summary = {"kind": cfg.kind, "master_seed": cfg.master_seed,
               "realizations": cfg.realizations, "cells": cells}
    if cfg.kind == "wnorm_scaling":
        points = [(c["d_r"], c["mean_w_norm"]) for c in cells
                  if c.get("p_g") == 1.0 and "mean_w_norm" in c]
        if len(points) >= 2:
            summary["wnorm_loglog_slope"] = _loglog_slope(points)
    if cfg.kind == "beta_sweep":
        best = {}
        for c in cells:
            p_g = c["p_g"]
            if "mean_tau_f" not in c:
                continue
            if p_g not in best or c["mean_tau_f"] > best[p_g]["mean_tau_f"]:
                best[p_g] = {"beta": c["beta"], "mean_tau_f": c["mean_tau_f"]}
        summary["best_beta_per_pg"] = [
            {"p_g": p_g, **v} for p_g, v in sorted(best.items())]
    return summary


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return str(value)


def write_records_csv(records: list[dict], path) -> None:
    columns = [c for c in kinds.RECORD_COLUMNS
               if any(c in r for r in records)] or kinds.RECORD_COLUMNS
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_format_value(rec.get(c)) for c in columns])


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_outputs(result: ExperimentResult, out_dir) -> None:
    """Emit results.csv, summary.json, kind-specific extras and plots.

    Plot failures are reported but never invalidate the CSV outputs.
    """
    os.makedirs(out_dir, exist_ok=True)
    write_records_csv(result.records, os.path.join(out_dir, "results.csv"))
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True,
                  default=_json_default)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        fh.write(result.config.to_json())
    if "columns" in result.extras:
        rows = result.extras["columns"]
        with open(os.path.join(out_dir, "columns.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["realization", "n_good", "column", "class",
                             "normalized_supnorm"])
            for r in rows:
                writer.writerow([r["realization"], r["n_good"], r["column"],
                                 r["class"], _format_value(r["normalized_supnorm"])])
    if "histograms" in result.extras:
        with open(os.path.join(out_dir, "histograms.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["realization", "model", "coord", "bin_left",
                             "bin_right", "count"])
            for item in result.extras["histograms"]:
                hist = item["hist"]
                for coord in range(len(hist.edges)):
                    edges = hist.edges[coord]
                    for k, count in enumerate(hist.counts[coord]):
                        writer.writerow([item["realization"], item["model"],
                                         "xyz"[coord],
                                         _format_value(float(edges[k])),
                                         _format_value(float(edges[k + 1])),
                                         int(count)])
    if result.errors:
        with open(os.path.join(out_dir, "errors.txt"), "w") as fh:
            fh.write("\n\n".join(result.errors))
    try:
        from goodweights.experiments import plots
        plots.render(result, out_dir)
    except Exception as exc:
        sys.stderr.write(f"WARNING: plotting failed ({exc}); CSV outputs are intact\n")
