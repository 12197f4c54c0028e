"""Closed-form ridge training of the outer weights.

The solve runs on the (D_r x D_r) Gram side: with N >> D_r this is the
cheap side, and the ridge term keeps the factorization positive definite.
The Gram matrix and the data-feature cross term are accumulated over
column blocks so the full feature matrix never has to exist in memory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from goodweights.dynamics import Trajectory
from goodweights.weights import InternalWeights, features

__all__ = [
    "RidgeConfig",
    "TrainingSet",
    "SurrogateModel",
    "feature_matrix",
    "ridge_solve",
    "solve_from_normal_equations",
    "normal_equations",
    "loss",
    "train_model",
    "normalized_column_supnorms",
    "save_model",
    "load_model",
]

_BLOCK_COLS = 4096


@dataclass(frozen=True)
class RidgeConfig:
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


@dataclass(frozen=True)
class TrainingSet:
    """One-step pairs: column n of ``targets`` follows column n of
    ``inputs`` by exactly one sample."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        if inputs.shape != targets.shape or inputs.ndim != 2:
            raise ValueError("inputs and targets must be equal-shape (D, N) matrices")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "TrainingSet":
        if traj.n_states < 2:
            raise ValueError("need at least two states to form one-step pairs")
        return cls(inputs=traj.states[:, :-1], targets=traj.states[:, 1:])

    @property
    def n_pairs(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class SurrogateModel:
    """Trained one-step surrogate ``u -> w_out @ tanh(w_in @ u + b_in)``."""

    iw: InternalWeights
    w_out: np.ndarray
    beta: float
    provenance: dict = field(default_factory=dict)
    train_loss: Optional[float] = None

    def __post_init__(self):
        w_out = np.ascontiguousarray(self.w_out, dtype=float)
        if w_out.shape != (self.iw.dim, self.iw.d_r):
            raise ValueError("w_out must be (D, D_r) matching the internal weights")
        if not np.isfinite(w_out).all():
            raise ValueError("non-finite outer weights")
        object.__setattr__(self, "w_out", w_out)

    def step(self, u: np.ndarray) -> np.ndarray:
        return self.w_out @ features(self.iw, u)


def feature_matrix(iw: InternalWeights, inputs) -> np.ndarray:
    """Feature matrix whose column n is ``tanh(w_in @ u_n + b_in)``."""
    inputs = getattr(inputs, "inputs", inputs)
    return features(iw, inputs)


def normal_equations(iw: InternalWeights, inputs: np.ndarray, targets: np.ndarray,
                     block: int = _BLOCK_COLS) -> tuple[np.ndarray, np.ndarray]:
    """Blocked accumulation of ``(Phi Phi^T, targets Phi^T)`` in float64."""
    d_r = iw.d_r
    gram = np.zeros((d_r, d_r))
    cross = np.zeros((targets.shape[0], d_r))
    for c0 in range(0, inputs.shape[1], block):
        phi = features(iw, inputs[:, c0:c0 + block])
        gram += phi @ phi.T
        cross += targets[:, c0:c0 + block] @ phi.T
    return gram, cross


def solve_from_normal_equations(gram: np.ndarray, cross: np.ndarray,
                                beta: float) -> np.ndarray:
    """Solve ``W (gram + beta I) = cross`` through a Cholesky factorization."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    a = gram + beta * np.eye(gram.shape[0])
    try:
        c, low = scipy.linalg.cho_factor(a, lower=True, check_finite=True)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"ridge factorization failed: {exc}") from exc
    return scipy.linalg.cho_solve((c, low), cross.T, check_finite=False).T


def ridge_solve(phi: np.ndarray, targets: np.ndarray, cfg: RidgeConfig) -> np.ndarray:
    """Outer weights ``targets Phi^T (Phi Phi^T + beta I)^{-1}``."""
    phi = np.asarray(phi, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if phi.ndim != 2 or targets.ndim != 2 or phi.shape[1] != targets.shape[1]:
        raise ValueError("phi (D_r, N) and targets (D, N) must share N")
    return solve_from_normal_equations(phi @ phi.T, targets @ phi.T, cfg.beta)


def loss(w_out: np.ndarray, phi: np.ndarray, targets: np.ndarray, cfg) -> float:
    """Squared-Frobenius misfit plus ``beta`` times squared weight norm.

    ``cfg`` may be a :class:`RidgeConfig` or a bare ``beta`` value (the
    solver requires ``beta > 0``, but evaluating the loss at ``beta = 0``
    is legitimate).
    """
    beta = cfg.beta if isinstance(cfg, RidgeConfig) else float(cfg)
    if beta < 0:
        raise ValueError("beta must be >= 0 for loss evaluation")
    resid = w_out @ phi - targets
    return float((resid * resid).sum() + beta * (w_out * w_out).sum())


def _loss_from_normal_equations(w_out, gram, cross, sq_targets, beta) -> float:
    # ||W Phi - U||^2 = tr(W G W^T) - 2 tr(C W^T) + ||U||^2
    misfit = float(np.einsum("ij,jk,ik->", w_out, gram, w_out)
                   - 2.0 * (cross * w_out).sum() + sq_targets)
    return misfit + beta * float((w_out * w_out).sum())


def train_model(iw: InternalWeights, trajectory: Trajectory, cfg: RidgeConfig,
                provenance: Optional[dict] = None,
                block: int = _BLOCK_COLS) -> SurrogateModel:
    """Assemble one-step pairs from the trajectory and fit the outer
    weights; the training loss is recorded on the model."""
    ts = TrainingSet.from_trajectory(trajectory)
    gram, cross = normal_equations(iw, ts.inputs, ts.targets, block=block)
    w_out = solve_from_normal_equations(gram, cross, cfg.beta)
    sq_targets = float((ts.targets * ts.targets).sum())
    return SurrogateModel(
        iw=iw, w_out=w_out, beta=cfg.beta, provenance=provenance or {},
        train_loss=_loss_from_normal_equations(w_out, gram, cross, sq_targets, cfg.beta),
    )


def normalized_column_supnorms(w_out: np.ndarray) -> np.ndarray:
    """Per-column sup-norms scaled by (machine epsilon + the largest
    column sup-norm), so the dominant column sits at ~1."""
    sup = np.abs(w_out).max(axis=0)
    return sup / (np.finfo(float).eps + sup.max())


def stationarity_residual(w_out, gram, cross, beta: float) -> float:
    """Relative Frobenius residual of the ridge normal equations."""
    num = np.linalg.norm(w_out @ (gram + beta * np.eye(gram.shape[0])) - cross)
    return float(num / np.linalg.norm(cross))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_model(model: SurrogateModel, path) -> None:
    """Single-file container bundling both weight sets, beta and provenance."""
    np.savez(
        path,
        w_in=model.iw.w_in,
        b_in=model.iw.b_in,
        w_out=model.w_out,
        beta=np.array(model.beta),
        train_loss=np.array(np.nan if model.train_loss is None else model.train_loss),
        row_classes=(model.iw.row_classes if model.iw.row_classes is not None
                     else np.array([])),
        provenance=np.frombuffer(json.dumps(model.provenance).encode(), dtype=np.uint8),
    )


def load_model(path) -> SurrogateModel:
    with np.load(path) as data:
        row_classes = data["row_classes"]
        iw = InternalWeights(
            w_in=data["w_in"], b_in=data["b_in"],
            row_classes=row_classes.astype(np.int8) if row_classes.size else None,
        )
        train_loss = float(data["train_loss"])
        return SurrogateModel(
            iw=iw,
            w_out=data["w_out"],
            beta=float(data["beta"]),
            provenance=json.loads(bytes(data["provenance"]).decode() or "{}"),
            train_loss=None if np.isnan(train_loss) else train_loss,
        )
