"""Lorenz-63 trajectory generation.

States are plain ``(3,)`` float arrays; trajectories store one column per
time step (shape ``(D, n_samples + 1)``) so that downstream feature
matrices are contiguous slices of the data.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from goodweights import _kernels

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "lorenz_rhs",
    "integrate",
    "generate_dataset",
    "trajectory_to_csv",
    "trajectory_from_csv",
]

#: Initial conditions are drawn uniformly from this box; it straddles the
#: attractor, and the transient discard makes the exact choice immaterial.
IC_BOX_LOW = np.array([-10.0, -10.0, 15.0])
IC_BOX_HIGH = np.array([10.0, 10.0, 35.0])


class IntegrationError(RuntimeError):
    """Raised when a trajectory leaves the finite floats."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (sample {step})")
        self.step = step


@dataclass(frozen=True)
class IntegratorConfig:
    """Sampling interval, internal RK4 resolution and transient discard."""

    dt_sample: float = 0.02
    substeps: int = 10
    transient_time: float = 40.0

    def __post_init__(self):
        if self.dt_sample <= 0:
            raise ValueError("dt_sample must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.transient_time < 0:
            raise ValueError("transient_time must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered states, one column per sample.

    ``states[:, n]`` is the state at time ``t0 + n * dt``.
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        states = np.ascontiguousarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[1] < 1:
            raise ValueError("states must be a (D, n>=1) matrix")
        if not np.isfinite(states).all():
            raise ValueError("trajectory contains non-finite states")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def n_states(self) -> int:
        return self.states.shape[1]

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_states)


def lorenz_rhs(u) -> np.ndarray:
    """Right-hand side of the Lorenz-63 vector field at state ``u``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (3,):
        raise ValueError("Lorenz-63 state must have 3 coordinates")
    if not np.isfinite(u).all():
        raise ValueError("non-finite state")
    x, y, z = u
    return np.array([10.0 * (y - x), x * (28.0 - z) - y, x * y - (8.0 / 3.0) * z])


def integrate(u0, cfg: IntegratorConfig, n_samples: int) -> Trajectory:
    """Integrate Lorenz-63 from ``u0`` for ``n_samples`` recorded samples.

    Each sample advances time by ``cfg.dt_sample`` using ``cfg.substeps``
    classical RK4 steps.  Raises :class:`IntegrationError` if the state
    diverges to non-finite values.
    """
    u0 = np.asarray(u0, dtype=float)
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    if not np.isfinite(u0).all():
        raise ValueError("non-finite initial state")
    states, bad = _kernels.lorenz_rk4(u0, cfg.dt_sample, cfg.substeps, n_samples)
    if bad >= 0:
        raise IntegrationError("Lorenz-63 integration diverged", bad)
    return Trajectory(states=states, dt=cfg.dt_sample)


def _settle_on_attractor(u0, cfg: IntegratorConfig) -> np.ndarray:
    """Run the transient at full resolution and return the final state."""
    n_transient = int(round(cfg.transient_time / cfg.dt_sample))
    if n_transient == 0:
        return np.asarray(u0, dtype=float)
    states, bad = _kernels.lorenz_rk4(u0, cfg.dt_sample, cfg.substeps, n_transient)
    if bad >= 0:
        raise IntegrationError("transient integration diverged", bad)
    return states[:, -1].copy()


def generate_dataset(
    seed,
    n_train: int,
    n_valid: int,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> tuple[Trajectory, Trajectory]:
    """Generate independent training and validation trajectories.

    Initial conditions are drawn uniformly from ``IC_BOX_LOW..IC_BOX_HIGH``
    and integrated through ``cfg.transient_time`` before recording starts.
    Deterministic in ``seed``.
    """
    if n_train < 1 or n_valid < 1:
        raise ValueError("n_train and n_valid must be >= 1")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    out = []
    for child, n in zip(root.spawn(2), (n_train, n_valid)):
        rng = np.random.default_rng(child)
        u0 = rng.uniform(IC_BOX_LOW, IC_BOX_HIGH)
        out.append(integrate(_settle_on_attractor(u0, cfg), cfg, n))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_CSV_HEADER = ["t", "x", "y", "z"]


def trajectory_to_csv(traj: Trajectory, path_or_buf) -> None:
    """Write ``t,x,y,z`` rows with 17 significant digits."""
    close = False
    if isinstance(path_or_buf, (str,)) or hasattr(path_or_buf, "__fspath__"):
        buf = open(path_or_buf, "w", newline="")
        close = True
    else:
        buf = path_or_buf
    try:
        writer = csv.writer(buf)
        writer.writerow(_CSV_HEADER[: 1 + traj.dim])
        times = traj.times()
        for n in range(traj.n_states):
            writer.writerow(
                [format(times[n], ".17g")]
                + [format(v, ".17g") for v in traj.states[:, n]]
            )
    finally:
        if close:
            buf.close()


def trajectory_from_csv(path_or_buf) -> Trajectory:
    """Inverse of :func:`trajectory_to_csv`."""
    if isinstance(path_or_buf, (str,)) or hasattr(path_or_buf, "__fspath__"):
        with open(path_or_buf, newline="") as fh:
            return trajectory_from_csv(io.StringIO(fh.read()))
    rows = list(csv.reader(path_or_buf))
    if len(rows) < 2:
        raise ValueError("trajectory CSV needs a header and at least one row")
    body = np.array([[float(v) for v in row] for row in rows[1:]])
    times, states = body[:, 0], body[:, 1:].T
    if len(times) > 1:
        dt = float(times[1] - times[0])
    else:
        dt = 1.0
    return Trajectory(states=states, dt=dt, t0=float(times[0]))
