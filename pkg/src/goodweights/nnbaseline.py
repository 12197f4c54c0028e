"""Single-layer network baseline trained end-to-end by gradient descent.

Same architecture as the random feature map, but the hidden weights are
learned too.  Plain full-batch descent; the only adaptivity is a scheduler
that rescales the learning rate by a fixed fraction whenever the loss
decays too slowly (or grows) over an update interval.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from goodweights.dynamics import Trajectory
from goodweights.forecast import ForecastConfig, evaluate_model
from goodweights.train import SurrogateModel, TrainingSet
from goodweights.weights import ClassBounds, InternalWeights, row_class_counts

__all__ = [
    "NetParams",
    "SchedulerState",
    "CheckpointRecord",
    "glorot_init",
    "loss_and_grad",
    "scheduler_update",
    "train_network",
    "history_to_csv",
]


@dataclass
class NetParams:
    """Learnable triple; also reused as the gradient container."""

    w_in: np.ndarray
    b_in: np.ndarray
    w: np.ndarray

    def astype(self, dtype) -> "NetParams":
        return NetParams(self.w_in.astype(dtype), self.b_in.astype(dtype),
                         self.w.astype(dtype))

    def copy(self) -> "NetParams":
        return NetParams(self.w_in.copy(), self.b_in.copy(), self.w.copy())


@dataclass(frozen=True)
class SchedulerState:
    """Adaptive learning rate: every ``interval`` steps compare the loss
    decay rate against ``threshold`` and rescale ``eta`` by ``fraction``."""

    eta: float = 1e-3
    interval: int = 100
    fraction: float = 0.1
    threshold: float = -1e-4
    last_loss: Optional[float] = None
    held: bool = False


@dataclass(frozen=True)
class CheckpointRecord:
    step: int
    loss: float
    eta: float
    mean_tau_f: float
    n_good: int
    n_linear: int
    n_saturated: int
    n_mixed: int


def glorot_init(d_r: int, d: int, rng: np.random.Generator) -> NetParams:
    """Uniform Glorot draws for both matrices (fan_in + fan_out = d + d_r
    either way); biases start at zero."""
    if d_r < 1 or d < 1:
        raise ValueError("d_r and d must be >= 1")
    limit = np.sqrt(6.0 / (d + d_r))
    return NetParams(
        w_in=rng.uniform(-limit, limit, size=(d_r, d)),
        b_in=np.zeros(d_r),
        w=rng.uniform(-limit, limit, size=(d, d_r)),
    )


def loss_and_grad(params: NetParams, inputs: np.ndarray, targets: np.ndarray,
                  beta: float) -> tuple[float, NetParams]:
    """Loss ``||W phi - U||^2 + beta ||W||^2`` with its analytic gradient.

    Backpropagation through tanh uses ``1 - phi^2``; computations run in
    the dtype of the inputs.
    """
    z = params.w_in @ inputs
    z += params.b_in[:, None]
    phi = np.tanh(z, out=z)
    resid = params.w @ phi
    resid -= targets
    value = float((resid * resid).sum() + beta * (params.w * params.w).sum())
    g_w = 2.0 * (resid @ phi.T)
    g_w += (2.0 * beta) * params.w
    back = params.w.T @ resid
    back *= 1.0 - phi * phi
    g_w_in = 2.0 * (back @ inputs.T)
    g_b_in = 2.0 * back.sum(axis=1)
    return value, NetParams(w_in=g_w_in, b_in=g_b_in, w=g_w)


class _Workspace:
    """Preallocated buffers for the training loop's gradient step.

    Computes the same loss and gradient as :func:`loss_and_grad` while
    reusing two feature-sized arrays per step instead of allocating six;
    ``phi`` is consumed in place during backpropagation.
    """

    def __init__(self, d_r: int, d: int, n: int, dtype):
        self.phi = np.empty((d_r, n), dtype=dtype)
        self.back = np.empty((d_r, n), dtype=dtype)
        self.resid = np.empty((d, n), dtype=dtype)
        self.g_w = np.empty((d, d_r), dtype=dtype)
        self.g_w_in = np.empty((d_r, d), dtype=dtype)

    def loss_and_grad(self, params: NetParams, inputs, targets, beta: float):
        phi, back, resid = self.phi, self.back, self.resid
        np.matmul(params.w_in, inputs, out=phi)
        phi += params.b_in[:, None]
        np.tanh(phi, out=phi)
        np.matmul(params.w, phi, out=resid)
        resid -= targets
        value = float((resid * resid).sum() + beta * (params.w * params.w).sum())
        np.matmul(resid, phi.T, out=self.g_w)
        self.g_w *= 2.0
        self.g_w += (2.0 * beta) * params.w
        np.matmul(params.w.T, resid, out=back)
        np.multiply(phi, phi, out=phi)
        np.subtract(1.0, phi, out=phi)
        back *= phi
        np.matmul(back, inputs.T, out=self.g_w_in)
        self.g_w_in *= 2.0
        g_b_in = 2.0 * back.sum(axis=1)
        return value, NetParams(w_in=self.g_w_in, b_in=g_b_in, w=self.g_w)


def scheduler_update(state: SchedulerState, step: int, current_loss: float) -> SchedulerState:
    """Every ``interval`` steps: relative loss change since the last probe;
    shrink ``eta`` if the loss grew, grow it if the decay is too slow,
    leave it alone if the decay beats the threshold."""
    if step < 1:
        raise ValueError("step must be >= 1")
    if step % state.interval != 0:
        return state
    if state.last_loss is None:
        return replace(state, last_loss=current_loss)
    if state.last_loss == 0.0:
        return replace(state, last_loss=current_loss, held=True)
    delta = (current_loss - state.last_loss) / state.last_loss
    eta = state.eta
    if delta > state.threshold:
        eta = eta * (1.0 - state.fraction) if delta > 0 else eta * (1.0 + state.fraction)
    return replace(state, eta=eta, last_loss=current_loss)


def _mean_tau_f(params: NetParams, validation: Sequence[Trajectory],
                beta: float, cfg: ForecastConfig) -> float:
    iw = InternalWeights(w_in=np.asarray(params.w_in, dtype=float),
                         b_in=np.asarray(params.b_in, dtype=float))
    model = SurrogateModel(iw=iw, w_out=np.asarray(params.w, dtype=float), beta=beta)
    if not validation:
        return float("nan")
    return float(np.mean([evaluate_model(model, v, cfg).tau_f for v in validation]))


def train_network(
    ts: TrainingSet,
    validation: Sequence[Trajectory],
    d_r: int,
    beta: float,
    steps: int,
    checkpoint_every: int = 10_000,
    rng: Optional[np.random.Generator] = None,
    init: NetParams | str = "glorot",
    forecast_cfg: ForecastConfig = ForecastConfig(),
    bounds: ClassBounds = ClassBounds(),
    scheduler: SchedulerState = SchedulerState(),
    dtype=np.float64,
    stop_when_no_good_every: Optional[int] = None,
    grad_scale: Optional[float] = None,
) -> tuple[NetParams, list[CheckpointRecord]]:
    """Full-batch gradient descent on all weights.

    The recorded loss is the plain squared-Frobenius objective, but the
    descent step applies ``eta * grad_scale`` with ``grad_scale``
    defaulting to ``1 / n_pairs``: the mean-gradient convention, under
    which the default ``eta = 1e-3`` is a sane step size (raw
    squared-error gradients on 20000-pair batches are of order 1e5 and
    blow the iteration up immediately).

    Checkpoints (step 0, every ``checkpoint_every`` steps, and the last
    step) record loss, learning rate, mean forecast time over the
    validation trajectories, and hidden-row class counts against the
    training data.  ``stop_when_no_good_every`` optionally probes the good
    count at that cadence and stops the run once it reaches zero.  Aborts
    with the history collected so far if the loss goes non-finite.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if init == "glorot":
        if rng is None:
            raise ValueError("glorot init needs an rng")
        params = glorot_init(d_r, ts.inputs.shape[0], rng)
    elif isinstance(init, NetParams):
        params = init.copy()
    else:
        raise ValueError(f"unknown init {init!r}")
    if params.w_in.shape[0] != d_r:
        raise ValueError("init width disagrees with d_r")
    params = params.astype(dtype)
    inputs = ts.inputs.astype(dtype)
    targets = ts.targets.astype(dtype)
    # classification data = the full trajectory the pairs were cut from
    class_states = np.hstack([ts.inputs, ts.targets[:, -1:]])

    def class_counts(p: NetParams):
        iw = InternalWeights(w_in=np.asarray(p.w_in, dtype=float),
                             b_in=np.asarray(p.b_in, dtype=float))
        return row_class_counts(iw, class_states, bounds)

    def checkpoint(step: int, value: float, eta: float) -> CheckpointRecord:
        counts = class_counts(params)
        return CheckpointRecord(step, value, eta,
                                _mean_tau_f(params, validation, beta, forecast_cfg),
                                *counts)

    if grad_scale is None:
        grad_scale = 1.0 / ts.n_pairs
    ws = _Workspace(d_r, inputs.shape[0], ts.n_pairs, dtype)
    history: list[CheckpointRecord] = []
    value, _ = loss_and_grad(params, inputs, targets, beta)
    history.append(checkpoint(0, value, scheduler.eta))
    state = scheduler
    for k in range(1, steps + 1):
        value, grad = ws.loss_and_grad(params, inputs, targets, beta)
        if not np.isfinite(value):
            break
        if k == 1:
            state = replace(state, last_loss=value)
        state = scheduler_update(state, k, value)
        step_size = state.eta * grad_scale
        params.w_in -= step_size * grad.w_in
        params.b_in -= step_size * grad.b_in
        params.w -= step_size * grad.w
        at_checkpoint = k % checkpoint_every == 0 or k == steps
        if at_checkpoint:
            history.append(checkpoint(k, value, state.eta))
        if stop_when_no_good_every and k % stop_when_no_good_every == 0:
            n_good = history[-1].n_good if at_checkpoint else class_counts(params)[0]
            if n_good == 0:
                if not at_checkpoint:
                    history.append(checkpoint(k, value, state.eta))
                break
    return params, history


def history_to_csv(history: Sequence[CheckpointRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "eta", "mean_tauf",
                         "n_good", "n_linear", "n_saturated", "n_mixed"])
        for rec in history:
            writer.writerow([rec.step, format(rec.loss, ".17g"),
                             format(rec.eta, ".17g"), format(rec.mean_tau_f, ".17g"),
                             rec.n_good, rec.n_linear, rec.n_saturated, rec.n_mixed])
