"""Random feature map parameterization and row-quality diagnostics.

A feature row ``(w, b)`` is judged by where the affine outputs
``w . u_n + b`` land over a data set: inside ``(L0, L1)`` in absolute value
for every point makes the row *good* (the tanh gets exercised in its
nonlinear, non-saturated range), uniformly small makes it *linear*,
uniformly large *saturated*, anything else *mixed*.
"""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from goodweights import _kernels

__all__ = [
    "ClassBounds",
    "RowClass",
    "InternalWeights",
    "FeatureFractions",
    "features",
    "classify_row",
    "classify_rows",
    "row_class_counts",
    "pointwise_fractions",
    "effective_range",
    "row_abs_extremes",
    "as_state_matrix",
    "save_weights",
    "load_weights",
    "weights_to_csv",
]

_MAGIC = b"GWIW"
_VERSION = 1

# column block for argument scans; keeps per-block scratch ~100 MB even for
# very wide feature matrices
_SCAN_ROW_BLOCK = 2048
_SCAN_COL_BLOCK = 8192


class RowClass(enum.IntEnum):
    GOOD = 0
    LINEAR = 1
    SATURATED = 2
    MIXED = 3

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ClassBounds:
    """Thresholds splitting the activation argument axis.

    ``|arg| <= l0`` is the linear range, ``|arg| >= l1`` the saturated one;
    the open band between them is where good features live.
    """

    l0: float = 0.4
    l1: float = 3.5

    def __post_init__(self):
        if not (0.0 < self.l0 < self.l1):
            raise ValueError("bounds must satisfy 0 < l0 < l1")


@dataclass(frozen=True)
class InternalWeights:
    """Hidden-layer weights ``w_in`` (D_r x D) and biases ``b_in`` (D_r,).

    ``row_classes`` optionally carries the class each row was sampled to
    hit; ``n_capped`` counts rows whose sampling ray had to be truncated.
    """

    w_in: np.ndarray
    b_in: np.ndarray
    row_classes: Optional[np.ndarray] = None
    n_capped: int = 0

    def __post_init__(self):
        w_in = np.ascontiguousarray(self.w_in, dtype=float)
        b_in = np.ascontiguousarray(self.b_in, dtype=float)
        if w_in.ndim != 2 or b_in.ndim != 1 or w_in.shape[0] != b_in.shape[0]:
            raise ValueError("w_in must be (D_r, D) with b_in of length D_r")
        if not (np.isfinite(w_in).all() and np.isfinite(b_in).all()):
            raise ValueError("non-finite internal weights")
        object.__setattr__(self, "w_in", w_in)
        object.__setattr__(self, "b_in", b_in)

    @property
    def d_r(self) -> int:
        return self.w_in.shape[0]

    @property
    def dim(self) -> int:
        return self.w_in.shape[1]


@dataclass(frozen=True)
class FeatureFractions:
    """Fractions of (row, data point) pairs in each activation range."""

    p_g: float
    p_l: float
    p_s: float


def as_state_matrix(data) -> np.ndarray:
    """Accept a Trajectory or a raw (D, N) array of states."""
    states = getattr(data, "states", data)
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if states.ndim != 2 or states.shape[1] < 1:
        raise ValueError("data must be a nonempty (D, N) state matrix")
    return states


def features(iw: InternalWeights, u) -> np.ndarray:
    """Feature vector ``tanh(w_in @ u + b_in)``; maps (D,) -> (D_r,) and
    (D, N) -> (D_r, N)."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != iw.dim:
        raise ValueError(f"state dimension {u.shape[0]} != weights dimension {iw.dim}")
    if u.ndim == 1:
        return np.tanh(iw.w_in @ u + iw.b_in)
    return np.tanh(iw.w_in @ u + iw.b_in[:, None])


def row_abs_extremes(w_in, b_in, data) -> tuple[np.ndarray, np.ndarray]:
    """Per-row min and max of ``|w . u_n + b|`` over all data points.

    Runs through the kernel layer (compiled when available); the argument
    matrix is never materialized in full.
    """
    states = as_state_matrix(data)
    w_in = np.ascontiguousarray(np.atleast_2d(np.asarray(w_in, dtype=float)))
    b_in = np.ascontiguousarray(np.atleast_1d(np.asarray(b_in, dtype=float)))
    if w_in.shape[1] != states.shape[0]:
        raise ValueError("weight row dimension does not match the data")
    return _kernels.row_args_extremes(w_in, b_in, states)


def _classes_from_extremes(m, big, bounds: ClassBounds) -> np.ndarray:
    out = np.full(m.shape, RowClass.MIXED, dtype=np.int8)
    out[(m > bounds.l0) & (big < bounds.l1)] = RowClass.GOOD
    out[big <= bounds.l0] = RowClass.LINEAR
    out[m >= bounds.l1] = RowClass.SATURATED
    return out


def classify_rows(iw: InternalWeights, data, bounds: ClassBounds = ClassBounds()) -> np.ndarray:
    """Class code of every row of ``iw`` against ``data`` (exhaustive scan)."""
    m, big = row_abs_extremes(iw.w_in, iw.b_in, data)
    return _classes_from_extremes(m, big, bounds)


def classify_row(w_row, b: float, data, bounds: ClassBounds = ClassBounds()) -> RowClass:
    """Classify a single row.

    Good requires the strict band ``l0 < |arg| < l1`` on every point;
    boundary hits count toward linear/saturated so the partition is total.
    """
    m, big = row_abs_extremes(np.asarray(w_row, dtype=float)[None, :], np.array([b]), data)
    return RowClass(int(_classes_from_extremes(m, big, bounds)[0]))


def row_class_counts(iw: InternalWeights, data, bounds: ClassBounds = ClassBounds()) -> tuple[int, int, int, int]:
    """Counts ``(n_good, n_linear, n_saturated, n_mixed)`` over all rows."""
    classes = classify_rows(iw, data, bounds)
    return tuple(int((classes == c).sum()) for c in
                 (RowClass.GOOD, RowClass.LINEAR, RowClass.SATURATED, RowClass.MIXED))


def pointwise_fractions(iw: InternalWeights, data, bounds: ClassBounds = ClassBounds()) -> FeatureFractions:
    """Fractions of (feature, data point) pairs with linear / saturated /
    good activation arguments; the three sum to one."""
    states = as_state_matrix(data)
    n_lin = 0
    n_sat = 0
    total = iw.d_r * states.shape[1]
    for r0 in range(0, iw.d_r, _SCAN_ROW_BLOCK):
        r1 = min(r0 + _SCAN_ROW_BLOCK, iw.d_r)
        wb = iw.w_in[r0:r1]
        bb = iw.b_in[r0:r1, None]
        for c0 in range(0, states.shape[1], _SCAN_COL_BLOCK):
            args = np.abs(wb @ states[:, c0:c0 + _SCAN_COL_BLOCK] + bb)
            n_lin += int((args <= bounds.l0).sum())
            n_sat += int((args >= bounds.l1).sum())
    p_l = n_lin / total
    p_s = n_sat / total
    return FeatureFractions(p_g=(total - n_lin - n_sat) / total, p_l=p_l, p_s=p_s)


def effective_range(iw: InternalWeights, data) -> float:
    """Mean over rows of the spread ``max - min`` of ``|w . u + b|``."""
    m, big = row_abs_extremes(iw.w_in, iw.b_in, data)
    return float(np.mean(big - m))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_weights(iw: InternalWeights, path) -> None:
    """Flat binary container: 16-byte header (magic, version, D_r, D), then
    ``w_in`` row-major float64, then ``b_in``.  Little-endian throughout."""
    header = _MAGIC + struct.pack("<III", _VERSION, iw.d_r, iw.dim)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(iw.w_in.astype("<f8").tobytes(order="C"))
        fh.write(iw.b_in.astype("<f8").tobytes())


def load_weights(path) -> InternalWeights:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _MAGIC:
            raise ValueError("not a weights container")
        version, d_r, d = struct.unpack("<III", header[4:])
        if version != _VERSION:
            raise ValueError(f"unsupported weights container version {version}")
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != d_r * d + d_r:
        raise ValueError("weights container is truncated")
    w_in = payload[: d_r * d].reshape(d_r, d)
    b_in = payload[d_r * d:]
    return InternalWeights(w_in=w_in.copy(), b_in=b_in.copy())


def weights_to_csv(iw: InternalWeights, path) -> None:
    """Human-inspectable dump: one row per feature, ``w_0..w_{D-1}, b`` plus
    the sampled class when known."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        cols = [f"w_{i}" for i in range(iw.dim)] + ["b"]
        if iw.row_classes is not None:
            cols.append("class")
        writer.writerow(cols)
        for i in range(iw.d_r):
            row = [format(v, ".17g") for v in iw.w_in[i]] + [format(iw.b_in[i], ".17g")]
            if iw.row_classes is not None:
                row.append(RowClass(int(iw.row_classes[i])).label)
            writer.writerow(row)
