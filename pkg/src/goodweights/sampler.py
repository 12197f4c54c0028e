"""Hit-and-run samplers for good, linear and saturated feature rows.

The solution set of good rows is a union of two convex reflections of each
other, so it suffices to sample the positive branch and flip a fair sign.
Membership is checked against the data's bounding box: for ``w`` in the
orthant with sign pattern ``s``, the extreme values of ``w . u + b`` over
the data are bracketed by the corner vectors ``x_-(s)`` and ``x_+(s)``,
which turns the per-point inequalities into two scalar checks.

Two samplers are provided:

* ``standard_hit_and_run_row`` walks a Markov chain of random chords
  through the feasible set, with bisection locating each chord's ends.
* ``one_shot_row`` fixes the bias first, picks a random orthant and a
  random ray direction inside it, computes the feasible ray length in
  closed form, and places a single uniform point on it.  No iteration, no
  bisection, and straightforward extensions to linear and saturated rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from goodweights import _kernels
from goodweights.weights import ClassBounds, InternalWeights, RowClass, as_state_matrix

__all__ = [
    "SamplerConfig",
    "DataCorners",
    "RowSample",
    "data_corners",
    "x_pm",
    "feasible_splus",
    "direction_in_cone",
    "one_shot_row",
    "standard_hit_and_run_row",
    "sample_rows",
    "sample_internal_weights",
]

_BRACKET_H0 = 1.0
_MAX_BISECT = 80

#: number of uniform/normal draws a single standard-sampler row consumes,
#: in order: b0, K*(D+1) normals, K chord positions, final sign
_STANDARD_DRAWS = ("b0", "normals", "chord", "sign")


@dataclass(frozen=True)
class SamplerConfig:
    bounds: ClassBounds = field(default_factory=ClassBounds)
    k_decorrelation: int = 10
    bisection_tol: float = 1e-10
    a_max: float = 1e3
    max_direction_retries: int = 64

    def __post_init__(self):
        if self.k_decorrelation < 1:
            raise ValueError("k_decorrelation must be >= 1")
        if self.bisection_tol <= 0 or self.a_max <= 0:
            raise ValueError("bisection_tol and a_max must be positive")


@dataclass(frozen=True)
class DataCorners:
    """Per-coordinate extremes of a data set."""

    coord_min: np.ndarray
    coord_max: np.ndarray

    def __post_init__(self):
        cmin = np.asarray(self.coord_min, dtype=float)
        cmax = np.asarray(self.coord_max, dtype=float)
        if cmin.shape != cmax.shape or cmin.ndim != 1:
            raise ValueError("corner vectors must be equal-length 1-D")
        if np.any(cmin > cmax):
            raise ValueError("coord_min must be <= coord_max")
        object.__setattr__(self, "coord_min", cmin)
        object.__setattr__(self, "coord_max", cmax)

    @property
    def dim(self) -> int:
        return self.coord_min.shape[0]


@dataclass(frozen=True)
class RowSample:
    w: np.ndarray
    b: float
    target_class: RowClass
    capped: bool = False


def data_corners(data) -> DataCorners:
    states = as_state_matrix(data)
    return DataCorners(coord_min=states.min(axis=1), coord_max=states.max(axis=1))


def x_pm(corners: DataCorners, s) -> tuple[np.ndarray, np.ndarray]:
    """Corner vectors for sign pattern ``s``: ``x_-`` collects the minima
    where ``s_i = +1`` (maxima where ``s_i = -1``), ``x_+`` the mirror."""
    s = np.asarray(s, dtype=float)
    if s.shape != (corners.dim,) or not np.all(np.abs(s) == 1.0):
        raise ValueError("sign vector must have entries +-1 matching the data dimension")
    pos = s > 0
    x_minus = np.where(pos, corners.coord_min, corners.coord_max)
    x_plus = np.where(pos, corners.coord_max, corners.coord_min)
    return x_minus, x_plus


def feasible_splus(w, b: float, corners: DataCorners, bounds: ClassBounds) -> bool:
    """Bounding-box membership test for the positive good branch.

    True iff ``w . x_-(sgn w) + b > l0`` and ``w . x_+(sgn w) + b < l1``
    (``sgn 0`` treated as +1), which implies ``l0 < w . u + b < l1`` on
    every data point.
    """
    w = np.asarray(w, dtype=float)
    s = np.where(w < 0, -1.0, 1.0)
    x_minus, x_plus = x_pm(corners, s)
    return bool(w @ x_minus + b > bounds.l0 and w @ x_plus + b < bounds.l1)


def direction_in_cone(s, rng: np.random.Generator, max_retries: int = 64) -> np.ndarray:
    """Unit vector whose component signs match ``s`` (isotropic within the
    orthant: componentwise |Gaussian| with the requested signs)."""
    s = np.asarray(s, dtype=float)
    for _ in range(max_retries):
        d = np.abs(rng.standard_normal(s.shape[0])) * s
        norm = float(np.sqrt(d @ d))
        if norm > 0.0:
            return d / norm
    raise RuntimeError("could not draw a nonzero direction")


def _ray_bound_candidates(target: RowClass, b: float, d: np.ndarray,
                          corners: DataCorners, bounds: ClassBounds,
                          s: np.ndarray) -> list[float]:
    """Positive ray lengths at which a constraint of the target set is hit.

    Division by zero yields +-inf; non-positive candidates mean the
    constraint never binds along the ray and are dropped by the caller.
    """
    x_minus, x_plus = x_pm(corners, s)
    # numpy scalar division: a zero denominator gives +-inf, which the
    # positivity filter and the inf convention handle uniformly
    div = np.float64.__truediv__
    with np.errstate(divide="ignore"):
        if target == RowClass.GOOD:
            return [
                div(np.float64(bounds.l0 - b), np.float64(d @ x_minus)),
                div(np.float64(bounds.l1 - b), np.float64(d @ x_plus)),
            ]
        if target == RowClass.LINEAR:
            return [
                div(np.float64(bounds.l0 - b), np.float64(d @ x_plus)),
                div(np.float64(-bounds.l0 - b), np.float64(d @ x_minus)),
            ]
        if target == RowClass.SATURATED:
            return [div(np.float64(bounds.l1 - b), np.float64(d @ x_minus))]
    raise ValueError(f"cannot sample rows of class {target!r}")


def _bias_interval(target: RowClass, bounds: ClassBounds) -> tuple[float, float]:
    if target == RowClass.GOOD:
        return bounds.l0, bounds.l1
    if target == RowClass.LINEAR:
        return 0.0, bounds.l0
    if target == RowClass.SATURATED:
        # unbounded above in principle; one l1-width keeps ensembles comparable
        return bounds.l1, 2.0 * bounds.l1
    raise ValueError(f"cannot sample rows of class {target!r}")


def one_shot_row(data_or_corners, cfg: SamplerConfig, rng: np.random.Generator,
                 target: RowClass = RowClass.GOOD) -> RowSample:
    """Draw one row of the target class with a single conical hit-and-run
    shot.

    The bias is drawn first (uniform on the class's interval), then a sign
    pattern, then a unit direction in that orthant; the feasible ray length
    is the smallest positive constraint crossing (+inf if none), truncated
    at ``cfg.a_max``, and the weight point is uniform on the ray.  A final
    fair sign flip selects the positive or negative branch.
    """
    corners = data_or_corners if isinstance(data_or_corners, DataCorners) \
        else data_corners(data_or_corners)
    lo_b, hi_b = _bias_interval(target, cfg.bounds)
    b = float(rng.uniform(lo_b, hi_b))
    s = np.where(rng.random(corners.dim) < 0.5, -1.0, 1.0)
    d = direction_in_cone(s, rng, cfg.max_direction_retries)
    candidates = [a for a in _ray_bound_candidates(target, b, d, corners, cfg.bounds, s)
                  if a > 0.0]
    a_1 = min(candidates) if candidates else np.inf
    capped = a_1 > cfg.a_max
    a = float(rng.uniform(0.0, min(a_1, cfg.a_max)))
    z = -1.0 if rng.random() < 0.5 else 1.0
    return RowSample(w=z * a * d, b=z * b, target_class=target, capped=bool(capped))


def _standard_draws(rng: np.random.Generator, k: int, dim: int,
                    bounds: ClassBounds):
    """Random numbers one standard-sampler row consumes, in fixed order."""
    b0 = float(rng.uniform(bounds.l0, bounds.l1))
    normals = rng.standard_normal((k, dim + 1))
    chord = rng.random(k)
    sign = -1.0 if rng.random() < 0.5 else 1.0
    return b0, normals, chord, sign


def standard_hit_and_run_row(data_or_corners, cfg: SamplerConfig,
                             rng: np.random.Generator) -> RowSample:
    """Draw one good row with the K-step hit-and-run chain.

    Starts at ``(0, b0)`` with ``b0`` uniform in ``(l0, l1)`` (always an
    interior point), walks ``cfg.k_decorrelation`` random chords whose ends
    are located by bisection, and flips the branch sign at the end.
    """
    corners = data_or_corners if isinstance(data_or_corners, DataCorners) \
        else data_corners(data_or_corners)
    b0, normals, chord, sign = _standard_draws(
        rng, cfg.k_decorrelation, corners.dim, cfg.bounds)
    w, b = _kernels.standard_good_rows(
        corners.coord_min, corners.coord_max, cfg.bounds.l0, cfg.bounds.l1,
        np.array([b0]), normals[None, :, :], chord[None, :], np.array([sign]),
        cfg.bisection_tol, _BRACKET_H0, cfg.a_max, _MAX_BISECT)
    return RowSample(w=w[0], b=float(b[0]), target_class=RowClass.GOOD)


def _spawn_row_streams(seed, n: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n)


def _sample_rows_from_streams(corners: DataCorners, streams, cfg: SamplerConfig,
                              algorithm: str, target: RowClass):
    """Sample one row per stream; the standard chain goes through the batch
    kernel, one-shot rows are drawn directly."""
    n = len(streams)
    capped = np.zeros(n, dtype=bool)
    if algorithm not in ("standard", "one-shot", "oneshot"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == "standard" and target == RowClass.GOOD:
        k = cfg.k_decorrelation
        b0 = np.empty(n)
        normals = np.empty((n, k, corners.dim + 1))
        chord = np.empty((n, k))
        signs = np.empty(n)
        for i, ss in enumerate(streams):
            b0[i], normals[i], chord[i], signs[i] = _standard_draws(
                np.random.default_rng(ss), k, corners.dim, cfg.bounds)
        w, b = _kernels.standard_good_rows(
            corners.coord_min, corners.coord_max, cfg.bounds.l0, cfg.bounds.l1,
            b0, normals, chord, signs,
            cfg.bisection_tol, _BRACKET_H0, cfg.a_max, _MAX_BISECT)
        return w, b, capped
    w = np.empty((n, corners.dim))
    b = np.empty(n)
    for i, ss in enumerate(streams):
        row = one_shot_row(corners, cfg, np.random.default_rng(ss), target)
        w[i] = row.w
        b[i] = row.b
        capped[i] = row.capped
    return w, b, capped


def sample_rows(data_or_corners, n: int, cfg: SamplerConfig, seed,
                algorithm: str = "one-shot",
                target: RowClass = RowClass.GOOD) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``n`` rows of one class; returns ``(w, b, capped)`` arrays.

    Each row consumes its own counter-derived random stream (child ``i`` of
    ``seed``), so any single row can be reproduced in isolation and results
    do not depend on batching.  The standard algorithm is only implemented
    for good rows; linear/saturated requests fall back to one-shot.
    """
    corners = data_or_corners if isinstance(data_or_corners, DataCorners) \
        else data_corners(data_or_corners)
    return _sample_rows_from_streams(corners, _spawn_row_streams(seed, n),
                                     cfg, algorithm, target)


def _bad_row_split(n_bad: int, bad_mix: str) -> tuple[int, int]:
    if bad_mix == "balanced":
        n_lin = n_bad // 2
        return n_lin, n_bad - n_lin
    if bad_mix in ("linear", "all-linear"):
        return n_bad, 0
    if bad_mix in ("saturated", "all-saturated"):
        return 0, n_bad
    raise ValueError(f"unknown bad_mix {bad_mix!r}")


def sample_internal_weights(data, d_r: int, p_g: float, cfg: SamplerConfig,
                            algorithm: str = "one-shot",
                            bad_mix: str = "balanced",
                            seed=0) -> InternalWeights:
    """Assemble a full internal-weight matrix with ``round(p_g * d_r)`` good
    rows, the rest split over linear/saturated rows per ``bad_mix``, in
    randomized row order.

    Row ``i``'s sample comes from child stream ``i`` of ``seed`` (good rows
    first, then linear, then saturated, before the final permutation).
    """
    if not 0.0 <= p_g <= 1.0:
        raise ValueError("p_g must lie in [0, 1]")
    if d_r < 1:
        raise ValueError("d_r must be >= 1")
    corners = data_corners(data)
    n_good = int(round(p_g * d_r))
    n_lin, n_sat = _bad_row_split(d_r - n_good, bad_mix)

    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(d_r + 1)
    w = np.empty((d_r, corners.dim))
    b = np.empty(d_r)
    capped = np.zeros(d_r, dtype=bool)
    classes = np.empty(d_r, dtype=np.int8)
    offset = 0
    for target, count in ((RowClass.GOOD, n_good), (RowClass.LINEAR, n_lin),
                          (RowClass.SATURATED, n_sat)):
        if count == 0:
            continue
        use_alg = algorithm if target == RowClass.GOOD else "one-shot"
        wt, bt, ct = _sample_rows_from_streams(
            corners, children[offset:offset + count], cfg, use_alg, target)
        w[offset:offset + count] = wt
        b[offset:offset + count] = bt
        capped[offset:offset + count] = ct
        classes[offset:offset + count] = target
        offset += count

    perm = np.random.default_rng(children[d_r]).permutation(d_r)
    return InternalWeights(w_in=w[perm], b_in=b[perm],
                           row_classes=classes[perm], n_capped=int(capped.sum()))
