# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  See ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdint cimport uint64_t, int64_t

from .errors import ConvergenceError

cnp.import_array()


cdef inline uint64_t _splitmix64(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef void _reseed(double[::1] v, uint64_t* state) noexcept nogil:
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double s = 0.0
    for i in range(n):
        v[i] = (_splitmix64(state) >> 11) * (2.0 / 9007199254740992.0) - 1.0
    for i in range(n):
        s += v[i] * v[i]
    s = sqrt(s)
    for i in range(n):
        v[i] /= s


def lambda_max_path(Z, double tol=1e-8, Py_ssize_t max_iter=10000, seed=0x5EED):
    cdef const double[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef Py_ssize_t n = Zv.shape[0], M = Zv.shape[1]
    cdef double[:, ::1] G = np.zeros((n, n))
    cdef double[::1] v = np.full(n, 1.0 / sqrt(<double>n))
    cdef double[::1] w = np.empty(n)
    cdef double[::1] z = np.empty(n)
    values = np.empty(M)
    iters = np.zeros(M, dtype=np.int64)
    cdef double[::1] vals = values
    cdef int64_t[::1] its = iters
    cdef uint64_t state = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t m, i, j, it
    cdef double lam, lam_prev, nw, acc
    cdef bint converged
    for m in range(M):
        with nogil:
            for i in range(n):
                z[i] = Zv[i, m]
            for i in range(n):
                for j in range(n):
                    G[i, j] += z[i] * z[j]
            lam_prev = -1.0
            lam = 0.0
            it = 0
            converged = False
            while it < max_iter:
                it += 1
                for i in range(n):
                    acc = 0.0
                    for j in range(n):
                        acc += G[i, j] * v[j]
                    w[i] = acc
                lam = 0.0
                nw = 0.0
                for i in range(n):
                    lam += v[i] * w[i]
                    nw += w[i] * w[i]
                nw = sqrt(nw)
                if nw == 0.0 or lam <= 0.0:
                    _reseed(v, &state)
                    lam_prev = -1.0
                    continue
                for i in range(n):
                    v[i] = w[i] / nw
                if fabs(lam - lam_prev) <= tol * lam:
                    converged = True
                    break
                lam_prev = lam
        if not converged:
            raise ConvergenceError(
                f"power iteration did not converge at m={m + 1} after {it} iterations",
                iterations=it,
            )
        vals[m] = lam
        its[m] = it
    return values, iters


def nested_error_counts(C, labels):
    cdef const double[:, ::1] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef const int64_t[::1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = Cv.shape[0], M = Cv.shape[1], i, k
    out = np.zeros(M, dtype=np.int64)
    cdef int64_t[::1] err = out
    cdef double s
    cdef bint is1
    with nogil:
        for i in range(n):
            s = 0.0
            is1 = y[i] == 1
            for k in range(M):
                s = s + Cv[i, k]
                if (s > 0.0) != is1:
                    err[k] += 1
    return out


def compensated_cumsum(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double s = 0.0, c = 0.0, t, xi
    with nogil:
        for i in range(n):
            xi = xv[i]
            t = s + xi
            if fabs(s) >= fabs(xi):
                c += (s - t) + xi
            else:
                c += (xi - t) + s
            s = t
            o[i] = s + c
    return out
