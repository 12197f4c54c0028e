"""Config-driven experiment sweeps over sampling, training and scoring."""

import dataclasses as _dataclasses

from goodweights.experiments.config import KINDS, ExperimentConfig
from goodweights.experiments.runner import (
    ExperimentResult,
    RealizationError,
    run_experiment,
    write_outputs,
)

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "ExperimentResult",
    "RealizationError",
    "run_experiment",
    "write_outputs",
] + [f"run_{kind}" for kind in KINDS]


def _kind_runner(kind):
    def run(cfg: ExperimentConfig, workers: int = 1,
            keep_going: bool = False) -> ExperimentResult:
        if cfg.kind != kind:
            cfg = _dataclasses.replace(cfg, kind=kind)
        return run_experiment(cfg, workers=workers, keep_going=keep_going)
    run.__name__ = f"run_{kind}"
    run.__doc__ = f"Run a {kind!r} experiment (see ``run_experiment``)."
    return run


run_heatmap = _kind_runner("heatmap")
run_pg_sweep = _kind_runner("pg_sweep")
run_effective_dim = _kind_runner("effective_dim")
run_wnorm_scaling = _kind_runner("wnorm_scaling")
run_suppression = _kind_runner("suppression")
run_beta_sweep = _kind_runner("beta_sweep")
run_sampler_compare = _kind_runner("sampler_compare")
run_invariant_measure = _kind_runner("invariant_measure")
run_nn_compare = _kind_runner("nn_compare")
