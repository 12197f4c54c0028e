# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Lorenz RK4, standard hit-and-run rows, rollouts.

The arithmetic mirrors the pure-Python fallback operation for operation
(same expression trees, same accumulation order) so both paths produce
identical trajectories and samples; see ``_ref.py``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, sqrt, tanh

cnp.import_array()

COMPILED = True

cdef double SIGMA = 10.0
cdef double RHO = 28.0
cdef double BETA = 8.0 / 3.0


# ---------------------------------------------------------------------------
# Lorenz-63 RK4 integration
# ---------------------------------------------------------------------------

def lorenz_rk4(u0, double dt_sample, int substeps, long n_samples):
    """See ``_ref.lorenz_rk4``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((3, n_samples + 1))
    cdef double[:, ::1] o = out
    cdef double x = u0[0]
    cdef double y = u0[1]
    cdef double z = u0[2]
    cdef double h = dt_sample / substeps
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z
    cdef double ax, ay, az
    cdef long n
    cdef int s
    o[0, 0] = x
    o[1, 0] = y
    o[2, 0] = z
    for n in range(1, n_samples + 1):
        for s in range(substeps):
            k1x = SIGMA * (y - x)
            k1y = x * (RHO - z) - y
            k1z = x * y - BETA * z
            ax = x + half * k1x
            ay = y + half * k1y
            az = z + half * k1z
            k2x = SIGMA * (ay - ax)
            k2y = ax * (RHO - az) - ay
            k2z = ax * ay - BETA * az
            ax = x + half * k2x
            ay = y + half * k2y
            az = z + half * k2z
            k3x = SIGMA * (ay - ax)
            k3y = ax * (RHO - az) - ay
            k3z = ax * ay - BETA * az
            ax = x + h * k3x
            ay = y + h * k3y
            az = z + h * k3z
            k4x = SIGMA * (ay - ax)
            k4y = ax * (RHO - az) - ay
            k4z = ax * ay - BETA * az
            x = x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
            y = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
            z = z + sixth * (k1z + 2.0 * (k2z + k3z) + k4z)
        o[0, n] = x
        o[1, n] = y
        o[2, n] = z
        if not (isfinite(x) and isfinite(y) and isfinite(z)):
            return out, n
    return out, -1


# ---------------------------------------------------------------------------
# Standard hit-and-run sampling of good rows
# ---------------------------------------------------------------------------

cdef inline bint _box_feasible(double* w, double b, double* cmin, double* cmax,
                               int d, double l0, double l1) noexcept nogil:
    cdef double lo = b
    cdef double hi = b
    cdef double wi
    cdef int i
    for i in range(d):
        wi = w[i]
        if wi < 0.0:
            lo = lo + wi * cmax[i]
            hi = hi + wi * cmin[i]
        else:
            lo = lo + wi * cmin[i]
            hi = hi + wi * cmax[i]
    return lo > l0 and hi < l1


cdef double _ray_limit(double* w, double b, double* dw, double db,
                       double* cmin, double* cmax, int d,
                       double l0, double l1, double h0, double a_max,
                       double tol, int max_bisect, double* scratch) noexcept nogil:
    cdef double lo = 0.0
    cdef double hi = h0
    cdef double mid
    cdef int i, it
    cdef bint f
    while True:
        for i in range(d):
            scratch[i] = w[i] + hi * dw[i]
        f = _box_feasible(scratch, b + hi * db, cmin, cmax, d, l0, l1)
        if f and hi < a_max:
            lo = hi
            hi = hi * 2.0
            continue
        if f:
            lo = hi
        break
    if lo < hi:
        it = 0
        while it < max_bisect and (hi - lo) >= tol:
            mid = 0.5 * (lo + hi)
            for i in range(d):
                scratch[i] = w[i] + mid * dw[i]
            if _box_feasible(scratch, b + mid * db, cmin, cmax, d, l0, l1):
                lo = mid
            else:
                hi = mid
            it = it + 1
    return lo


def standard_good_rows(cnp.ndarray[cnp.float64_t, ndim=1] cmin_arr,
                       cnp.ndarray[cnp.float64_t, ndim=1] cmax_arr,
                       double l0, double l1,
                       cnp.ndarray[cnp.float64_t, ndim=1] b0,
                       cnp.ndarray[cnp.float64_t, ndim=3] normals,
                       cnp.ndarray[cnp.float64_t, ndim=2] seg_u,
                       cnp.ndarray[cnp.float64_t, ndim=1] signs,
                       double tol, double h0, double a_max, int max_bisect):
    """See ``_ref.standard_good_rows``."""
    cdef long r = normals.shape[0]
    cdef int k_iter = <int> normals.shape[1]
    cdef int d = <int> normals.shape[2] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] w_out = np.empty((r, d))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b_out = np.empty(r)
    cdef double[::1] cmin = np.ascontiguousarray(cmin_arr)
    cdef double[::1] cmax = np.ascontiguousarray(cmax_arr)
    cdef double[::1] b0v = np.ascontiguousarray(b0)
    cdef double[:, :, ::1] nv = np.ascontiguousarray(normals)
    cdef double[:, ::1] uv = np.ascontiguousarray(seg_u)
    cdef double[::1] sv = np.ascontiguousarray(signs)
    cdef double[:, ::1] wo = w_out
    cdef double[::1] bo = b_out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.empty(4 * d + 1)
    cdef double* w = <double*> cnp.PyArray_DATA(work)
    cdef double* dw = w + d
    cdef double* ndw = dw + d
    cdef double* scratch = ndw + d
    cdef double b, db, nrm, t_plus, t_minus, t, sg
    cdef long row
    cdef int i, k
    for row in range(r):
        b = b0v[row]
        for i in range(d):
            w[i] = 0.0
        if not _box_feasible(w, b, &cmin[0], &cmax[0], d, l0, l1):
            raise RuntimeError("infeasible hit-and-run start (0, b0)")
        for k in range(k_iter):
            nrm = 0.0
            for i in range(d + 1):
                nrm = nrm + nv[row, k, i] * nv[row, k, i]
            nrm = sqrt(nrm)
            for i in range(d):
                dw[i] = nv[row, k, i] / nrm
                ndw[i] = -dw[i]
            db = nv[row, k, d] / nrm
            t_plus = _ray_limit(w, b, dw, db, &cmin[0], &cmax[0], d,
                                l0, l1, h0, a_max, tol, max_bisect, scratch)
            t_minus = _ray_limit(w, b, ndw, -db, &cmin[0], &cmax[0], d,
                                 l0, l1, h0, a_max, tol, max_bisect, scratch)
            t = -t_minus + uv[row, k] * (t_plus + t_minus)
            for i in range(d):
                w[i] = w[i] + t * dw[i]
            b = b + t * db
        sg = sv[row]
        for i in range(d):
            wo[row, i] = sg * w[i]
        bo[row] = sg * b
    return w_out, b_out


# ---------------------------------------------------------------------------
# Row-argument extremes (exhaustive classification scan)
# ---------------------------------------------------------------------------

def row_args_extremes(cnp.ndarray[cnp.float64_t, ndim=2] w,
                      cnp.ndarray[cnp.float64_t, ndim=1] b,
                      cnp.ndarray[cnp.float64_t, ndim=2] states):
    """See ``_ref.row_args_extremes``."""
    cdef long n_rows = w.shape[0]
    cdef int d = <int> w.shape[1]
    cdef long n = states.shape[1]
    # point-major layout keeps the inner loop on consecutive doubles
    cdef double[:, ::1] pts = np.ascontiguousarray(states.T)
    cdef double[:, ::1] wv = np.ascontiguousarray(w)
    cdef double[::1] bv = np.ascontiguousarray(b)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] m = np.empty(n_rows)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] big = np.empty(n_rows)
    cdef double[::1] mv = m
    cdef double[::1] bigv = big
    cdef double lo, hi, acc
    cdef long r, k
    cdef int i
    with nogil:
        for r in range(n_rows):
            lo = 1e308
            hi = -1e308
            for k in range(n):
                acc = bv[r]
                for i in range(d):
                    acc = acc + wv[r, i] * pts[k, i]
                if acc < 0.0:
                    acc = -acc
                if acc < lo:
                    lo = acc
                if acc > hi:
                    hi = acc
            mv[r] = lo
            bigv[r] = hi
    return m, big


# ---------------------------------------------------------------------------
# Autonomous surrogate rollout
# ---------------------------------------------------------------------------

def surrogate_rollout(cnp.ndarray[cnp.float64_t, ndim=2] w_in,
                      cnp.ndarray[cnp.float64_t, ndim=1] b_in,
                      cnp.ndarray[cnp.float64_t, ndim=2] w_out,
                      cnp.ndarray[cnp.float64_t, ndim=1] u0,
                      long n_steps):
    """See ``_ref.surrogate_rollout``."""
    cdef long d_r = w_in.shape[0]
    cdef int d = <int> w_in.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((d, n_steps + 1))
    cdef double[:, ::1] o = out
    cdef double[:, ::1] wi = np.ascontiguousarray(w_in)
    cdef double[::1] bi = np.ascontiguousarray(b_in)
    cdef double[:, ::1] wo = np.ascontiguousarray(w_out)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] work = np.empty(d_r + 2 * d)
    cdef double* phi = <double*> cnp.PyArray_DATA(work)
    cdef double* u = phi + d_r
    cdef double* unew = u + d
    cdef double acc
    cdef long n, j
    cdef int i
    cdef bint ok
    for i in range(d):
        u[i] = u0[i]
        o[i, 0] = u[i]
    for n in range(1, n_steps + 1):
        ok = True
        with nogil:
            for j in range(d_r):
                acc = bi[j]
                for i in range(d):
                    acc = acc + wi[j, i] * u[i]
                phi[j] = tanh(acc)
            for i in range(d):
                acc = 0.0
                for j in range(d_r):
                    acc = acc + wo[i, j] * phi[j]
                unew[i] = acc
            for i in range(d):
                u[i] = unew[i]
                if not isfinite(u[i]):
                    ok = False
        for i in range(d):
            o[i, n] = u[i]
        if not ok:
            return out, n
    return out, -1
