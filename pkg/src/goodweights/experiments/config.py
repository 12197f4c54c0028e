"""Experiment configuration: one flat JSON-serializable record.

Every experiment kind reads the subset of fields it needs; unused fields
keep their defaults so a config written for one kind stays loadable for
another.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional

KINDS = (
    "heatmap",
    "pg_sweep",
    "effective_dim",
    "wnorm_scaling",
    "suppression",
    "beta_sweep",
    "sampler_compare",
    "invariant_measure",
    "nn_compare",
)


@dataclass
class ExperimentConfig:
    kind: str = "pg_sweep"
    master_seed: int = 0
    realizations: int = 100

    # data
    n_train: int = 20000
    n_valid: int = 1500
    data_mode: str = "per_realization"  # or "shared"
    dt: float = 0.02
    substeps: int = 10
    transient_time: float = 40.0

    # model / training
    d_r: int = 300
    beta: float = 4e-5
    p_g: float = 1.0
    algorithm: str = "one-shot"
    bad_mix: str = "balanced"

    # sampler
    l0: float = 0.4
    l1: float = 3.5
    k_decorrelation: int = 10
    a_max: float = 1e3

    # forecast scoring
    theta: float = 0.05
    lambda_max: float = 0.91
    horizon_steps: int = 1500

    # sweep grids; None means "use the scalar field"
    d_r_list: Optional[list[int]] = None
    p_g_list: Optional[list[float]] = None
    beta_list: Optional[list[float]] = None
    bad_mix_list: Optional[list[str]] = None
    #: explicit cell override: list of {"d_r": ..., "p_g": ..., ...} dicts
    cells: Optional[list[dict]] = None

    # heatmap grid over uniform-draw intervals (0, w_max] x (0, b_max]
    w_max: float = 0.4
    b_max: float = 4.0
    grid: int = 30

    # suppression
    suppression_start: str = "saturated"
    suppression_checkpoints: list[int] = field(default_factory=lambda: [10, 50, 150])

    # invariant measure
    total_time: float = 2000.0
    burn_in: float = 40.0
    bins: int = 100
    n_seeds: int = 10

    # nn baseline
    nn_steps: int = 50_000
    nn_checkpoint_every: int = 10_000
    nn_eta0: float = 1e-3
    nn_valid_trajectories: int = 25
    nn_dtype: str = "float32"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.data_mode not in ("per_realization", "shared"):
            raise ValueError("data_mode must be 'per_realization' or 'shared'")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())
