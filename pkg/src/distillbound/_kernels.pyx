# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_kernels_py``; same signatures."""

import numpy as np

from libc.math cimport exp, log, sqrt, M_PI


def kde_log_density(points, anchors, double sigma, Py_ssize_t chunk=2048):
    cdef double[:, ::1] z = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] x = np.ascontiguousarray(anchors, dtype=np.float64)
    cdef Py_ssize_t p = z.shape[0], n = x.shape[0], d = x.shape[1]
    out_arr = np.empty(p)
    cdef double[::1] out = out_arr
    cdef double[::1] e = np.empty(n)
    cdef double norm = -0.5 * d * (log(2.0 * M_PI) + 2.0 * log(sigma)) - log(<double>n)
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t i, j, c
    cdef double sq, diff, mx, acc
    with nogil:
        for i in range(p):
            mx = -1e308
            for j in range(n):
                sq = 0.0
                for c in range(d):
                    diff = z[i, c] - x[j, c]
                    sq = sq + diff * diff
                e[j] = -sq * inv
                if e[j] > mx:
                    mx = e[j]
            acc = 0.0
            for j in range(n):
                acc = acc + exp(e[j] - mx)
            out[i] = mx + log(acc) + norm
    return out_arr


def outer_residual_norms(target, left, right, left_idx, right_idx, coef):
    cdef double[:, ::1] t = np.ascontiguousarray(target, dtype=np.float64)
    cdef double[:, ::1] lf = np.ascontiguousarray(left, dtype=np.float64)
    cdef double[:, ::1] rt = np.ascontiguousarray(right, dtype=np.float64)
    cdef long long[:, ::1] li = np.ascontiguousarray(left_idx, dtype=np.int64)
    cdef long long[:, ::1] ri = np.ascontiguousarray(right_idx, dtype=np.int64)
    cdef double[:, ::1] cf = np.ascontiguousarray(coef, dtype=np.float64)
    cdef Py_ssize_t draws = li.shape[0], k = li.shape[1]
    cdef Py_ssize_t p = t.shape[0], q = t.shape[1]
    out_arr = np.empty(draws)
    cdef double[::1] out = out_arr
    cdef double[:, ::1] r = np.empty((p, q))
    cdef Py_ssize_t s, l, a, b, pi, qi
    cdef double c, acc, val
    with nogil:
        for s in range(draws):
            r[:, :] = t
            for l in range(k):
                c = cf[s, l]
                if c == 0.0:
                    continue
                pi = li[s, l]
                qi = ri[s, l]
                for a in range(p):
                    val = c * lf[a, pi]
                    if val == 0.0:
                        continue
                    for b in range(q):
                        r[a, b] = r[a, b] - val * rt[b, qi]
            acc = 0.0
            for a in range(p):
                for b in range(q):
                    acc = acc + r[a, b] * r[a, b]
            out[s] = sqrt(acc)
    return out_arr


def power_iteration(a, v0, double tol, Py_ssize_t max_iter):
    cdef double[:, ::1] m = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1]
    v_arr = np.array(v0, dtype=np.float64)
    cdef double[::1] v = v_arr
    cdef double[::1] av = np.empty(rows)
    cdef double[::1] w = np.empty(cols)
    cdef Py_ssize_t it, i, j
    cdef double lam = 0.0, nrm = 0.0, res, acc
    cdef bint converged = False
    for j in range(cols):
        nrm += v[j] * v[j]
    nrm = sqrt(nrm)
    for j in range(cols):
        v[j] /= nrm
    with nogil:
        for it in range(1, max_iter + 1):
            lam = 0.0
            for i in range(rows):
                acc = 0.0
                for j in range(cols):
                    acc = acc + m[i, j] * v[j]
                av[i] = acc
                lam = lam + acc * acc
            if lam == 0.0:
                converged = True
                break
            for j in range(cols):
                w[j] = 0.0
            for i in range(rows):
                acc = av[i]
                for j in range(cols):
                    w[j] = w[j] + m[i, j] * acc
            nrm = 0.0
            res = 0.0
            for j in range(cols):
                acc = w[j]
                nrm = nrm + acc * acc
                res = res + (acc - lam * v[j]) * (acc - lam * v[j])
            nrm = sqrt(nrm)
            for j in range(cols):
                v[j] = w[j] / nrm
            if sqrt(res) <= tol * lam:
                converged = True
                lam = 0.0
                for i in range(rows):
                    acc = 0.0
                    for j in range(cols):
                        acc = acc + m[i, j] * v[j]
                    lam = lam + acc * acc
                break
    return lam, v_arr, it, converged
