"""Pure-Python / NumPy fallback for the hot kernels.

Mirrors the arithmetic of the compiled core operation for operation so the
two implementations produce identical trajectories and samples (the rollout
kernel is the one exception: it goes through ``np.tanh``, which may differ
from libm's ``tanh`` in the last bit).
"""

import numpy as np

COMPILED = False

SIGMA = 10.0
RHO = 28.0
BETA = 8.0 / 3.0


# ---------------------------------------------------------------------------
# Lorenz-63 RK4 integration
# ---------------------------------------------------------------------------

def _rhs(x, y, z):
    return SIGMA * (y - x), x * (RHO - z) - y, x * y - BETA * z


def lorenz_rk4(u0, dt_sample, substeps, n_samples):
    """Integrate Lorenz-63 with classical RK4.

    Each of the ``n_samples`` recorded steps is made of ``substeps`` RK4
    steps of size ``dt_sample / substeps``.

    Returns ``(states, bad)`` where ``states`` is a ``(3, n_samples + 1)``
    array including the initial state, and ``bad`` is the index of the first
    non-finite sample (-1 if the whole trajectory is finite; samples past a
    non-finite one are left unwritten).
    """
    out = np.empty((3, n_samples + 1))
    x = float(u0[0])
    y = float(u0[1])
    z = float(u0[2])
    out[0, 0] = x
    out[1, 0] = y
    out[2, 0] = z
    h = dt_sample / substeps
    half = 0.5 * h
    sixth = h / 6.0
    for n in range(1, n_samples + 1):
        for _ in range(substeps):
            k1x, k1y, k1z = _rhs(x, y, z)
            k2x, k2y, k2z = _rhs(x + half * k1x, y + half * k1y, z + half * k1z)
            k3x, k3y, k3z = _rhs(x + half * k2x, y + half * k2y, z + half * k2z)
            k4x, k4y, k4z = _rhs(x + h * k3x, y + h * k3y, z + h * k3z)
            x = x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
            y = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
            z = z + sixth * (k1z + 2.0 * (k2z + k3z) + k4z)
        out[0, n] = x
        out[1, n] = y
        out[2, n] = z
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            return out, n
    return out, -1


# ---------------------------------------------------------------------------
# Standard hit-and-run sampling of good rows
# ---------------------------------------------------------------------------

def _box_feasible(w, b, cmin, cmax, l0, l1):
    """Vectorized corner feasibility: does (w, b) map the data bounding box
    into (l0, l1)?

    ``w`` is (R, D), ``b`` is (R,).  Accumulation order matches the compiled
    core (coordinate by coordinate).
    """
    d = w.shape[1]
    lo = b.copy()
    hi = b.copy()
    for i in range(d):
        wi = w[:, i]
        neg = wi < 0.0
        # sgn(0) = +1: x_- is cmin where w >= 0
        lo = lo + wi * np.where(neg, cmax[i], cmin[i])
        hi = hi + wi * np.where(neg, cmin[i], cmax[i])
    return (lo > l0) & (hi < l1)


def _ray_limit(w, b, dw, db, cmin, cmax, l0, l1, h0, a_max, tol, max_bisect):
    """Largest feasible step from (w, b) along (dw, db), per row.

    Bracket by doubling from ``h0`` (capped at ``a_max``), then bisect down
    to ``tol``; the returned endpoint is on the feasible side.
    """
    r = b.shape[0]
    lo = np.zeros(r)
    hi = np.full(r, h0)
    active = np.ones(r, dtype=bool)
    while active.any():
        feas = _box_feasible(w + hi[:, None] * dw, b + hi * db, cmin, cmax, l0, l1)
        grow = active & feas & (hi < a_max)
        stop_cap = active & feas & ~(hi < a_max)
        lo[grow] = hi[grow]
        hi[grow] *= 2.0
        # capped rows keep t = hi and skip bisection
        lo[stop_cap] = hi[stop_cap]
        active = grow
    need = lo < hi
    for _ in range(max_bisect):
        act = need & ((hi - lo) >= tol)
        if not act.any():
            break
        mid = 0.5 * (lo + hi)
        feas = _box_feasible(w + mid[:, None] * dw, b + mid * db, cmin, cmax, l0, l1)
        take_lo = act & feas
        take_hi = act & ~feas
        lo[take_lo] = mid[take_lo]
        hi[take_hi] = mid[take_hi]
    return lo


def standard_good_rows(cmin, cmax, l0, l1, b0, normals, seg_u, signs,
                       tol, h0, a_max, max_bisect):
    """Hit-and-run chains for good rows, run in lock-step over a batch.

    ``b0``: (R,) initial biases in (l0, l1); ``normals``: (R, K, D+1) raw
    Gaussian directions; ``seg_u``: (R, K) uniforms locating the jump on
    each chord; ``signs``: (R,) +-1 reflections applied at the end.

    Returns ``(w, b)`` with ``w`` of shape (R, D).
    """
    r, k_iter, dp1 = normals.shape
    d = dp1 - 1
    if not _box_feasible(np.zeros((r, d)), b0, cmin, cmax, l0, l1).all():
        raise RuntimeError("infeasible hit-and-run start (0, b0)")
    w = np.zeros((r, d))
    b = b0.astype(float).copy()
    for k in range(k_iter):
        raw = normals[:, k, :]
        # accumulate the squared norm coordinate by coordinate (same
        # rounding as the compiled core)
        sq = raw[:, 0] * raw[:, 0]
        for j in range(1, dp1):
            sq = sq + raw[:, j] * raw[:, j]
        nrm = np.sqrt(sq)
        dw = raw[:, :d] / nrm[:, None]
        db = raw[:, d] / nrm
        t_plus = _ray_limit(w, b, dw, db, cmin, cmax, l0, l1, h0, a_max, tol, max_bisect)
        t_minus = _ray_limit(w, b, -dw, -db, cmin, cmax, l0, l1, h0, a_max, tol, max_bisect)
        t = -t_minus + seg_u[:, k] * (t_plus + t_minus)
        w = w + t[:, None] * dw
        b = b + t * db
    return signs[:, None] * w, signs * b


# ---------------------------------------------------------------------------
# Row-argument extremes (exhaustive classification scan)
# ---------------------------------------------------------------------------

_SCAN_ROW_BLOCK = 1024
_SCAN_COL_BLOCK = 4096


def row_args_extremes(w, b, states):
    """Per-row min and max of ``|w . u_n + b|`` over all columns of
    ``states``; blocked so the argument matrix never fully materializes."""
    n_rows = w.shape[0]
    m = np.empty(n_rows)
    big = np.empty(n_rows)
    for r0 in range(0, n_rows, _SCAN_ROW_BLOCK):
        r1 = min(r0 + _SCAN_ROW_BLOCK, n_rows)
        wb = w[r0:r1]
        bb = b[r0:r1, None]
        lo = None
        hi = None
        for c0 in range(0, states.shape[1], _SCAN_COL_BLOCK):
            args = wb @ states[:, c0:c0 + _SCAN_COL_BLOCK]
            args += bb
            np.abs(args, out=args)
            blo = args.min(axis=1)
            bhi = args.max(axis=1)
            lo = blo if lo is None else np.minimum(lo, blo)
            hi = bhi if hi is None else np.maximum(hi, bhi)
        m[r0:r1] = lo
        big[r0:r1] = hi
    return m, big


# ---------------------------------------------------------------------------
# Autonomous surrogate rollout
# ---------------------------------------------------------------------------

def surrogate_rollout(w_in, b_in, w_out, u0, n_steps):
    """Iterate ``u -> w_out @ tanh(w_in @ u + b_in)`` for ``n_steps`` steps.

    Returns ``(states, bad)``: states is (D, n_steps + 1); ``bad`` is the
    index of the first non-finite state (-1 if none).
    """
    d = u0.shape[0]
    out = np.empty((d, n_steps + 1))
    u = np.asarray(u0, dtype=float).copy()
    out[:, 0] = u
    for n in range(1, n_steps + 1):
        u = w_out @ np.tanh(w_in @ u + b_in)
        out[:, n] = u
        if not np.isfinite(u).all():
            return out, n
    return out, -1
