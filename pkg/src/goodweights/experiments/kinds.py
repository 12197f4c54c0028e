"""Per-kind task enumeration and realization bodies.

Every kind is decomposed into independent *tasks*; a task produces one or
more flat result records.  Task ``i`` draws all of its randomness from the
counter-derived stream ``SeedSequence(master_seed, spawn_key=(1, i))``, so
any single task can be re-run in isolation; the shared dataset (when
``data_mode='shared'``) lives on stream ``spawn_key=(0,)``.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

from goodweights import forecast, nnbaseline, sampler, train, weights
from goodweights.dynamics import IntegratorConfig, generate_dataset
from goodweights.experiments.config import ExperimentConfig
from goodweights.weights import ClassBounds, InternalWeights, RowClass

#: stable column order of results.csv; unused fields stay empty
RECORD_COLUMNS = [
    "kind", "task", "realization", "d_r", "p_g", "beta", "algorithm",
    "bad_mix", "w", "b", "seed_key", "tau_f", "censored", "steps", "loss",
    "w_norm", "r_train", "r_valid", "n_good", "n_linear", "n_saturated",
    "n_mixed", "n_capped", "model", "coord", "l1_distance", "hist_valid",
    "step", "eta", "mean_tau_f",
]

_GENERIC_KINDS = ("heatmap", "pg_sweep", "effective_dim", "wnorm_scaling",
                  "beta_sweep", "sampler_compare")


def data_stream(master_seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(0,))


def task_stream(master_seed: int, task_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(1, task_index))


def _integrator(cfg: ExperimentConfig) -> IntegratorConfig:
    return IntegratorConfig(dt_sample=cfg.dt, substeps=cfg.substeps,
                            transient_time=cfg.transient_time)


def _sampler_cfg(cfg: ExperimentConfig) -> sampler.SamplerConfig:
    return sampler.SamplerConfig(bounds=ClassBounds(l0=cfg.l0, l1=cfg.l1),
                                 k_decorrelation=cfg.k_decorrelation,
                                 a_max=cfg.a_max)


def _forecast_cfg(cfg: ExperimentConfig) -> forecast.ForecastConfig:
    return forecast.ForecastConfig(theta=cfg.theta, lambda_max=cfg.lambda_max,
                                   horizon_steps=cfg.horizon_steps)


@functools.lru_cache(maxsize=4)
def _shared_dataset(master_seed: int, n_train: int, n_valid: int,
                    dt: float, substeps: int, transient: float):
    cfg = IntegratorConfig(dt_sample=dt, substeps=substeps, transient_time=transient)
    return generate_dataset(data_stream(master_seed), n_train, n_valid, cfg)


def _dataset(cfg: ExperimentConfig, data_ss: np.random.SeedSequence):
    if cfg.data_mode == "shared":
        return _shared_dataset(cfg.master_seed, cfg.n_train, cfg.n_valid,
                               cfg.dt, cfg.substeps, cfg.transient_time)
    return generate_dataset(data_ss, cfg.n_train, cfg.n_valid, _integrator(cfg))


# ---------------------------------------------------------------------------
# Cell enumeration
# ---------------------------------------------------------------------------

def _cells(cfg: ExperimentConfig) -> list[dict]:
    """Parameter cells for the generic kinds; one task = one (cell,
    realization) pair."""
    if cfg.cells is not None:
        return [dict(c) for c in cfg.cells]
    if cfg.kind == "heatmap":
        w_grid = np.linspace(0.0, cfg.w_max, cfg.grid + 1)[1:]
        b_grid = np.linspace(0.0, cfg.b_max, cfg.grid + 1)[1:]
        return [{"w": float(w), "b": float(b)}
                for w, b in itertools.product(w_grid, b_grid)]
    if cfg.kind == "pg_sweep":
        p_gs = cfg.p_g_list if cfg.p_g_list is not None else [cfg.p_g]
        d_rs = cfg.d_r_list if cfg.d_r_list is not None else [cfg.d_r]
        return [{"d_r": int(d_r), "p_g": float(p_g)}
                for d_r, p_g in itertools.product(d_rs, p_gs)]
    if cfg.kind == "effective_dim":
        p_gs = cfg.p_g_list if cfg.p_g_list is not None else [cfg.p_g]
        d_rs = cfg.d_r_list if cfg.d_r_list is not None else [cfg.d_r]
        mixes = cfg.bad_mix_list if cfg.bad_mix_list is not None else [cfg.bad_mix]
        return [{"d_r": int(d_r), "p_g": float(p_g), "bad_mix": mix}
                for d_r, p_g, mix in itertools.product(d_rs, p_gs, mixes)]
    if cfg.kind == "wnorm_scaling":
        d_rs = cfg.d_r_list if cfg.d_r_list is not None else [cfg.d_r]
        p_gs = cfg.p_g_list if cfg.p_g_list is not None else [1.0]
        return [{"d_r": int(d_r), "p_g": float(p_g)}
                for d_r, p_g in itertools.product(d_rs, p_gs)]
    if cfg.kind == "beta_sweep":
        betas = cfg.beta_list if cfg.beta_list is not None else [cfg.beta]
        p_gs = cfg.p_g_list if cfg.p_g_list is not None else [cfg.p_g]
        return [{"beta": float(b), "p_g": float(p_g)}
                for b, p_g in itertools.product(betas, p_gs)]
    if cfg.kind == "sampler_compare":
        return [{"algorithm": "standard"}, {"algorithm": "one-shot"}]
    raise ValueError(f"kind {cfg.kind!r} does not enumerate cells")


def build_tasks(cfg: ExperimentConfig) -> list[dict]:
    if cfg.kind in _GENERIC_KINDS:
        tasks = []
        for cell_index, cell in enumerate(_cells(cfg)):
            for r in range(cfg.realizations):
                tasks.append({"cell_index": cell_index, "cell": cell,
                              "realization": r})
    elif cfg.kind == "suppression":
        tasks = [{"realization": r} for r in range(cfg.realizations)]
    elif cfg.kind == "invariant_measure":
        tasks = [{"realization": r} for r in range(cfg.n_seeds)]
    elif cfg.kind == "nn_compare":
        # one NN training plus the RFM ensemble on the same data
        tasks = ([{"nn": True, "realization": 0}]
                 + [{"nn": False, "realization": r} for r in range(cfg.realizations)])
    else:
        raise ValueError(f"unknown kind {cfg.kind!r}")
    for i, t in enumerate(tasks):
        t["task"] = i
    return tasks


# ---------------------------------------------------------------------------
# Generic realization (one model: sample/draw -> train -> score)
# ---------------------------------------------------------------------------

def _uniform_draw_weights(d_r: int, dim: int, w: float, b: float,
                          rng: np.random.Generator) -> InternalWeights:
    return InternalWeights(w_in=rng.uniform(-w, w, size=(d_r, dim)),
                           b_in=rng.uniform(-b, b, size=d_r))


def _base_record(cfg: ExperimentConfig, task: dict) -> dict:
    return {"kind": cfg.kind, "task": task["task"],
            "realization": task["realization"]}


def _run_generic(cfg: ExperimentConfig, task: dict):
    cell = task["cell"]
    ss = task_stream(cfg.master_seed, task["task"])
    data_ss, weights_ss = ss.spawn(2)
    train_traj, valid_traj = _dataset(cfg, data_ss)

    d_r = int(cell.get("d_r", cfg.d_r))
    beta = float(cell.get("beta", cfg.beta))
    if "w" in cell:  # uniform-interval draw (heatmap protocol)
        iw = _uniform_draw_weights(d_r, train_traj.dim, cell["w"], cell["b"],
                                   np.random.default_rng(weights_ss))
    else:
        iw = sampler.sample_internal_weights(
            train_traj, d_r, float(cell.get("p_g", cfg.p_g)), _sampler_cfg(cfg),
            algorithm=cell.get("algorithm", cfg.algorithm),
            bad_mix=cell.get("bad_mix", cfg.bad_mix), seed=weights_ss)
    model = train.train_model(iw, train_traj, train.RidgeConfig(beta=beta))
    outcome = forecast.evaluate_model(model, valid_traj, _forecast_cfg(cfg))
    bounds = ClassBounds(l0=cfg.l0, l1=cfg.l1)
    counts = weights.row_class_counts(iw, train_traj, bounds)
    rec = _base_record(cfg, task)
    rec.update(cell)
    rec.update({
        "d_r": d_r, "beta": beta, "seed_key": f"(1, {task['task']})",
        "tau_f": outcome.tau_f, "censored": int(outcome.censored),
        "steps": outcome.steps, "loss": model.train_loss,
        "w_norm": float(np.linalg.norm(model.w_out)),
        "r_train": weights.effective_range(iw, train_traj),
        "r_valid": weights.effective_range(iw, valid_traj),
        "n_good": counts[0], "n_linear": counts[1],
        "n_saturated": counts[2], "n_mixed": counts[3],
        "n_capped": iw.n_capped,
    })
    return [rec], {}


# ---------------------------------------------------------------------------
# Suppression: successively replace bad rows by good rows
# ---------------------------------------------------------------------------

def _run_suppression(cfg: ExperimentConfig, task: dict):
    ss = task_stream(cfg.master_seed, task["task"])
    data_ss, bad_ss, good_ss = ss.spawn(3)
    train_traj, valid_traj = _dataset(cfg, data_ss)
    scfg = _sampler_cfg(cfg)
    start_mix = {"linear": "all-linear", "saturated": "all-saturated"}[cfg.suppression_start]
    iw = sampler.sample_internal_weights(train_traj, cfg.d_r, 0.0, scfg,
                                         bad_mix=start_mix, seed=bad_ss)
    w_in = iw.w_in.copy()
    b_in = iw.b_in.copy()
    classes = iw.row_classes.copy()
    n_max = max(cfg.suppression_checkpoints)
    good_w, good_b, _ = sampler.sample_rows(train_traj, n_max, scfg,
                                            seed=good_ss, target=RowClass.GOOD)
    ridge = train.RidgeConfig(beta=cfg.beta)
    fcfg = _forecast_cfg(cfg)
    records = []
    columns = []
    for step in range(1, n_max + 1):
        w_in[step - 1] = good_w[step - 1]
        b_in[step - 1] = good_b[step - 1]
        classes[step - 1] = RowClass.GOOD
        cur = InternalWeights(w_in=w_in, b_in=b_in, row_classes=classes.copy())
        model = train.train_model(cur, train_traj, ridge)
        outcome = forecast.evaluate_model(model, valid_traj, fcfg)
        rec = _base_record(cfg, task)
        rec.update({
            "d_r": cfg.d_r, "beta": cfg.beta, "p_g": step / cfg.d_r,
            "bad_mix": start_mix, "seed_key": f"(1, {task['task']})",
            "n_good": step, "tau_f": outcome.tau_f,
            "censored": int(outcome.censored), "loss": model.train_loss,
            "w_norm": float(np.linalg.norm(model.w_out)),
        })
        records.append(rec)
        if step in cfg.suppression_checkpoints:
            norms = train.normalized_column_supnorms(model.w_out)
            for col in range(cfg.d_r):
                columns.append({
                    "realization": task["realization"], "n_good": step,
                    "column": col,
                    "class": RowClass(int(classes[col])).label,
                    "normalized_supnorm": norms[col],
                })
    return records, {"columns": columns}


# ---------------------------------------------------------------------------
# Invariant measure: truth vs p_g=1 vs p_g=0 marginal histograms
# ---------------------------------------------------------------------------

def _run_invariant(cfg: ExperimentConfig, task: dict):
    ss = task_stream(cfg.master_seed, task["task"])
    data_ss, w1_ss, w0_ss = ss.spawn(3)
    train_traj, valid_traj = _dataset(cfg, data_ss)
    u0 = valid_traj.states[:, 0]
    truth = forecast.invariant_histograms(None, u0, cfg.total_time,
                                          bins=cfg.bins, burn_in=cfg.burn_in,
                                          dt=cfg.dt, substeps=cfg.substeps)
    scfg = _sampler_cfg(cfg)
    ridge = train.RidgeConfig(beta=cfg.beta)
    records = []
    extras = {"histograms": []}
    for label, p_g, wss in (("pg1", 1.0, w1_ss), ("pg0", 0.0, w0_ss)):
        iw = sampler.sample_internal_weights(train_traj, cfg.d_r, p_g, scfg,
                                             bad_mix="balanced", seed=wss)
        model = train.train_model(iw, train_traj, ridge)
        hist = forecast.invariant_histograms(model, u0, cfg.total_time,
                                             bins=cfg.bins, burn_in=cfg.burn_in,
                                             dt=cfg.dt, edges=truth.edges)
        dists = forecast.l1_histogram_distance(hist, truth)
        for coord, dist in enumerate(dists):
            rec = _base_record(cfg, task)
            rec.update({"d_r": cfg.d_r, "beta": cfg.beta, "p_g": p_g,
                        "model": label, "coord": "xyz"[coord],
                        "l1_distance": float(dist),
                        "hist_valid": int(hist.valid),
                        "seed_key": f"(1, {task['task']})"})
            records.append(rec)
        extras["histograms"].append({"realization": task["realization"],
                                     "model": label, "hist": hist})
    extras["histograms"].append({"realization": task["realization"],
                                 "model": "truth", "hist": truth})
    return records, extras


# ---------------------------------------------------------------------------
# NN baseline comparison
# ---------------------------------------------------------------------------

def _nn_validation_set(cfg: ExperimentConfig, ss: np.random.SeedSequence):
    icfg = _integrator(cfg)
    return [generate_dataset(child, cfg.horizon_steps, 1, icfg)[0]
            for child in ss.spawn(cfg.nn_valid_trajectories)]


def _run_nn_compare(cfg: ExperimentConfig, task: dict):
    master_valid_ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(2,))
    train_traj, _ = _shared_dataset(cfg.master_seed, cfg.n_train, cfg.n_valid,
                                    cfg.dt, cfg.substeps, cfg.transient_time)
    validation = _nn_validation_set(cfg, master_valid_ss)
    ts = train.TrainingSet.from_trajectory(train_traj)
    fcfg = _forecast_cfg(cfg)
    bounds = ClassBounds(l0=cfg.l0, l1=cfg.l1)
    if task["nn"]:
        ss = task_stream(cfg.master_seed, task["task"])
        rng = np.random.default_rng(ss)
        _, history = nnbaseline.train_network(
            ts, validation, cfg.d_r, cfg.beta, cfg.nn_steps,
            checkpoint_every=cfg.nn_checkpoint_every, rng=rng,
            forecast_cfg=fcfg, bounds=bounds,
            scheduler=nnbaseline.SchedulerState(eta=cfg.nn_eta0),
            dtype=np.dtype(cfg.nn_dtype).type)
        records = []
        for rec_cp in history:
            rec = _base_record(cfg, task)
            rec.update({"model": "nn", "d_r": cfg.d_r, "beta": cfg.beta,
                        "step": rec_cp.step, "loss": rec_cp.loss,
                        "eta": rec_cp.eta, "mean_tau_f": rec_cp.mean_tau_f,
                        "n_good": rec_cp.n_good, "n_linear": rec_cp.n_linear,
                        "n_saturated": rec_cp.n_saturated,
                        "n_mixed": rec_cp.n_mixed,
                        "seed_key": f"(1, {task['task']})"})
            records.append(rec)
        return records, {}
    ss = task_stream(cfg.master_seed, task["task"])
    iw = sampler.sample_internal_weights(train_traj, cfg.d_r, 1.0,
                                         _sampler_cfg(cfg), seed=ss)
    model = train.train_model(iw, train_traj, train.RidgeConfig(beta=cfg.beta))
    taus = [forecast.evaluate_model(model, v, fcfg).tau_f for v in validation]
    counts = weights.row_class_counts(iw, train_traj, bounds)
    rec = _base_record(cfg, task)
    rec.update({"model": "rfm", "d_r": cfg.d_r, "beta": cfg.beta,
                "p_g": 1.0, "loss": model.train_loss,
                "mean_tau_f": float(np.mean(taus)),
                "w_norm": float(np.linalg.norm(model.w_out)),
                "n_good": counts[0], "n_linear": counts[1],
                "n_saturated": counts[2], "n_mixed": counts[3],
                "seed_key": f"(1, {task['task']})"})
    return [rec], {}


def run_task(cfg_kwargs: dict, task: dict):
    """Worker entry point: returns ``(task_index, records, extras)``."""
    cfg = ExperimentConfig(**cfg_kwargs)
    if cfg.kind in _GENERIC_KINDS:
        records, extras = _run_generic(cfg, task)
    elif cfg.kind == "suppression":
        records, extras = _run_suppression(cfg, task)
    elif cfg.kind == "invariant_measure":
        records, extras = _run_invariant(cfg, task)
    elif cfg.kind == "nn_compare":
        records, extras = _run_nn_compare(cfg, task)
    else:
        raise ValueError(f"unknown kind {cfg.kind!r}")
    return task["task"], records, extras
