"""Autonomous surrogate rollouts, forecast-time scoring, and long-run
marginal histograms.

The forecast time is the first Lyapunov-scaled time at which the rollout's
relative squared error against a true validation trajectory exceeds a
threshold; rollouts that never exceed it within the horizon are censored
at the horizon value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from goodweights import _kernels
from goodweights.dynamics import IntegratorConfig, Trajectory, integrate
from goodweights.train import SurrogateModel

__all__ = [
    "ForecastConfig",
    "ForecastOutcome",
    "MarginalHistograms",
    "RolloutDivergence",
    "iterate",
    "forecast_time",
    "evaluate_model",
    "invariant_histograms",
    "l1_histogram_distance",
]


class RolloutDivergence(RuntimeError):
    """A surrogate rollout left the finite floats."""

    def __init__(self, step: int, partial: np.ndarray):
        super().__init__(f"surrogate rollout diverged at step {step}")
        self.step = step
        self.partial = partial


@dataclass(frozen=True)
class ForecastConfig:
    theta: float = 0.05
    lambda_max: float = 0.91
    horizon_steps: int = 1500

    def __post_init__(self):
        if self.theta <= 0 or self.lambda_max <= 0 or self.horizon_steps < 1:
            raise ValueError("theta, lambda_max must be positive; horizon_steps >= 1")


@dataclass(frozen=True)
class ForecastOutcome:
    """``tau_f`` in Lyapunov units; ``steps`` is the exceedance step (the
    horizon for censored outcomes)."""

    tau_f: float
    censored: bool
    steps: int


@dataclass(frozen=True)
class MarginalHistograms:
    """Per-coordinate histograms on shared edges; ``valid`` is False when
    the generating rollout diverged and the counts are partial."""

    edges: tuple[np.ndarray, ...]
    counts: tuple[np.ndarray, ...]
    total: int
    valid: bool = True


def _rollout(model: SurrogateModel, u0, n: int) -> tuple[np.ndarray, int]:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (model.iw.dim,):
        raise ValueError("initial state dimension mismatch")
    return _kernels.surrogate_rollout(model.iw.w_in, model.iw.b_in, model.w_out,
                                      u0, n)


def iterate(model: SurrogateModel, u0, n: int, dt: float = 0.02) -> Trajectory:
    """Iterate the surrogate map autonomously for ``n`` steps.

    Raises :class:`RolloutDivergence` (carrying the partial states) if the
    rollout leaves the finite floats; with tanh features this can only
    happen through non-finite weights.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    states, bad = _rollout(model, u0, n)
    if bad >= 0:
        raise RolloutDivergence(bad, states[:, :bad])
    return Trajectory(states=states, dt=dt)


def forecast_time(pred: Trajectory, truth: Trajectory,
                  cfg: ForecastConfig = ForecastConfig()) -> ForecastOutcome:
    """First Lyapunov-scaled time the relative squared error exceeds
    ``cfg.theta``.

    Both trajectories must share dt and start from the same state.  The
    search starts at step 1 (step 0 has zero error by construction) and
    runs to ``min(len - 1, cfg.horizon_steps)``; censored outcomes carry
    the horizon value ``horizon_steps * dt * lambda_max``.
    """
    if pred.n_states != truth.n_states:
        raise ValueError("pred and truth must have equal lengths")
    if not math.isclose(pred.dt, truth.dt, rel_tol=1e-12):
        raise ValueError("pred and truth must share dt")
    if not np.array_equal(pred.states[:, 0], truth.states[:, 0]):
        raise ValueError("pred must start from the truth's initial state")
    last = min(pred.n_states - 1, cfg.horizon_steps)
    diff = pred.states[:, 1:last + 1] - truth.states[:, 1:last + 1]
    num = (diff * diff).sum(axis=0)
    den = (truth.states[:, 1:last + 1] ** 2).sum(axis=0)
    exceed = np.flatnonzero(num > cfg.theta * den)
    if exceed.size == 0:
        if (den == 0.0).any():
            raise ZeroDivisionError("validation state with zero norm")
        return ForecastOutcome(
            tau_f=cfg.horizon_steps * truth.dt * cfg.lambda_max,
            censored=True, steps=cfg.horizon_steps)
    n = int(exceed[0]) + 1
    if (den[:n] == 0.0).any():
        raise ZeroDivisionError("validation state with zero norm")
    return ForecastOutcome(tau_f=n * truth.dt * cfg.lambda_max,
                           censored=False, steps=n)


def evaluate_model(model: SurrogateModel, validation: Trajectory,
                   cfg: ForecastConfig = ForecastConfig()) -> ForecastOutcome:
    """Roll the surrogate out from the validation trajectory's first state
    and score it against the remainder."""
    n = min(cfg.horizon_steps, validation.n_states - 1)
    states, bad = _rollout(model, validation.states[:, 0], n)
    if bad >= 0:
        # non-finite prediction: count it as an exceedance at that step
        return ForecastOutcome(tau_f=bad * validation.dt * cfg.lambda_max,
                               censored=False, steps=bad)
    pred = Trajectory(states=states, dt=validation.dt)
    truth = Trajectory(states=validation.states[:, :n + 1], dt=validation.dt)
    return forecast_time(pred, truth, cfg)


# ---------------------------------------------------------------------------
# Invariant-measure histograms
# ---------------------------------------------------------------------------

def _padded_edges(states: np.ndarray, bins: int, pad: float = 0.05):
    edges = []
    for i in range(states.shape[0]):
        lo = float(states[i].min())
        hi = float(states[i].max())
        span = hi - lo if hi > lo else 1.0
        edges.append(np.linspace(lo - pad * span, hi + pad * span, bins + 1))
    return tuple(edges)


def invariant_histograms(model, u0, total_time: float, bins: int = 100,
                         burn_in: float = 40.0, dt: float = 0.02,
                         substeps: int = 10, edges=None) -> MarginalHistograms:
    """Marginal histograms of a long autonomous run.

    ``model=None`` integrates the true system (this is the reference run
    whose 5%-padded extremes fix the bin ranges); otherwise the surrogate
    is iterated.  Pass the reference run's ``edges`` so that model and
    truth histograms share bins.
    """
    if not total_time > burn_in >= 0:
        raise ValueError("need total_time > burn_in >= 0")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    n = int(round(total_time / dt))
    n_burn = int(round(burn_in / dt))
    valid = True
    if model is None:
        traj = integrate(u0, IntegratorConfig(dt_sample=dt, substeps=substeps,
                                              transient_time=0.0), n)
        states = traj.states
    else:
        states, bad = _rollout(model, u0, n)
        if bad >= 0:
            states = states[:, :bad]
            valid = False
    states = states[:, n_burn:]
    if states.shape[1] == 0:
        states = np.zeros((len(u0), 0))
    if edges is None:
        if not valid or states.shape[1] == 0:
            raise ValueError("cannot derive bin edges from a diverged run")
        edges = _padded_edges(states, bins)
    counts = tuple(np.histogram(states[i], bins=edges[i])[0]
                   for i in range(len(edges)))
    return MarginalHistograms(edges=tuple(np.asarray(e) for e in edges),
                              counts=counts, total=int(states.shape[1]),
                              valid=valid)


def l1_histogram_distance(a: MarginalHistograms, b: MarginalHistograms) -> np.ndarray:
    """Per-coordinate L1 distance between normalized histograms (in [0, 2];
    out-of-range mass counts against the total)."""
    if len(a.edges) != len(b.edges):
        raise ValueError("histogram dimensionality mismatch")
    out = np.empty(len(a.edges))
    for i, (ea, eb) in enumerate(zip(a.edges, b.edges)):
        if not np.array_equal(ea, eb):
            raise ValueError("histograms must share bin edges")
        pa = a.counts[i] / max(a.total, 1)
        pb = b.counts[i] / max(b.total, 1)
        out[i] = np.abs(pa - pb).sum() + abs(
            (1.0 - pa.sum()) - (1.0 - pb.sum()))
    return out
