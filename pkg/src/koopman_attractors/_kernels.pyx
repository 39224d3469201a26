# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Semantics match :mod:`koopman_attractors._fallback` function for function;
the fallback is the reference and the test-suite compares the two.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, sin, cos, sqrt

cnp.import_array()


cdef inline void _hilmy_rhs(double u, double th, double* du, double* dth) noexcept nogil:
    cdef double s = sin(th)
    cdef double e = expm1(u)
    cdef double g = e * e + s * s
    du[0] = -u * g
    dth[0] = g


cdef inline void _hilmy_step(double* u, double* th, double h) noexcept nogil:
    cdef double k1u, k1t, k2u, k2t, k3u, k3t, k4u, k4t
    _hilmy_rhs(u[0], th[0], &k1u, &k1t)
    _hilmy_rhs(u[0] + 0.5 * h * k1u, th[0] + 0.5 * h * k1t, &k2u, &k2t)
    _hilmy_rhs(u[0] + 0.5 * h * k2u, th[0] + 0.5 * h * k2t, &k3u, &k3t)
    _hilmy_rhs(u[0] + h * k3u, th[0] + h * k3t, &k4u, &k4t)
    u[0] = u[0] + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    th[0] = th[0] + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)


def hilmy_advance(double[::1] u, double[::1] th, double h, Py_ssize_t nsteps):
    """Advance log-radius ``u`` and angle ``th`` in place by ``nsteps`` RK4 steps."""
    cdef Py_ssize_t i, k, n = u.shape[0]
    cdef double ui, ti
    with nogil:
        for i in range(n):
            ui = u[i]
            ti = th[i]
            for k in range(nsteps):
                _hilmy_step(&ui, &ti, h)
            u[i] = ui
            th[i] = ti


def hilmy_tail_atoms(double[::1] u, double[::1] th, double h, Py_ssize_t substeps,
                     Py_ssize_t n_burn, Py_ssize_t n_tail, double radius):
    """Stream orbits and return the displacement-decimated tail measure.

    ``u`` and ``th`` are advanced in place to the final time.  Returns
    ``(owner, atoms, weights)``.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k, s, m
    cdef double dt = h * substeps
    cdef double ui, ti, x, y, ax = 0.0, ay = 0.0, w, r2 = radius * radius, r
    cdef Py_ssize_t cap = (n_tail + 1) if n_tail >= 0 else 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] buf_pts = np.empty((cap, 2))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf_w = np.empty(cap)
    cdef double[:, ::1] bp = buf_pts
    cdef double[::1] bw = buf_w
    owners, atoms, weights = [], [], []
    for i in range(n):
        ui = u[i]
        ti = th[i]
        m = 0
        with nogil:
            for k in range(n_burn):
                for s in range(substeps):
                    _hilmy_step(&ui, &ti, h)
            for k in range(n_tail + 1):
                if k > 0:
                    for s in range(substeps):
                        _hilmy_step(&ui, &ti, h)
                r = exp(ui)
                x = r * cos(ti)
                y = r * sin(ti)
                w = dt if 0 < k < n_tail else 0.5 * dt
                if n_tail == 0:
                    w = 0.0
                if m == 0 or (x - ax) * (x - ax) + (y - ay) * (y - ay) > r2:
                    ax = x
                    ay = y
                    bp[m, 0] = x
                    bp[m, 1] = y
                    bw[m] = 0.0
                    m += 1
                bw[m - 1] += w
        u[i] = ui
        th[i] = ti
        owners.append(np.full(m, i, dtype=np.int64))
        atoms.append(buf_pts[:m].copy())
        weights.append(buf_w[:m].copy())
    if n == 0:
        return np.empty(0, np.int64), np.empty((0, 2)), np.empty(0)
    return np.concatenate(owners), np.vstack(atoms), np.concatenate(weights)


def greedy_net(double[:, ::1] pts, double radius):
    """Indices of a greedy ``radius``-net: keep a point iff no kept point is
    within distance ``radius`` of it."""
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1]
    cdef Py_ssize_t i, j, c, m = 0
    cdef double acc, diff, r2 = radius * radius
    cdef bint covered
    cdef cnp.ndarray[cnp.int64_t, ndim=1] kept = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] kv = kept
    with nogil:
        for i in range(n):
            covered = False
            # scan newest first: consecutive samples tend to be close
            for j in range(m - 1, -1, -1):
                acc = 0.0
                for c in range(d):
                    diff = pts[i, c] - pts[kv[j], c]
                    acc = acc + diff * diff
                if acc <= r2:
                    covered = True
                    break
            if not covered:
                kv[m] = i
                m += 1
    return kept[:m].copy()


def decimate(double[:, ::1] pts, double[::1] weights, double radius):
    """Sequential displacement decimation of a sampled path.

    A sample starts a new atom when it is farther than ``radius`` from the
    current atom; its weight is credited to the atom it belongs to.
    Returns ``(indices, atom_weights)``.
    """
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1]
    cdef Py_ssize_t i, c, m = 0, cur = 0
    cdef double acc, diff, r2 = radius * radius
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aw = np.zeros(n)
    cdef cnp.int64_t[::1] iv = idx
    cdef double[::1] av = aw
    with nogil:
        for i in range(n):
            if m == 0:
                iv[0] = i
                m = 1
                cur = i
            else:
                acc = 0.0
                for c in range(d):
                    diff = pts[i, c] - pts[cur, c]
                    acc = acc + diff * diff
                if acc > r2:
                    iv[m] = i
                    m += 1
                    cur = i
            av[m - 1] += weights[i]
    return idx[:m].copy(), aw[:m].copy()
