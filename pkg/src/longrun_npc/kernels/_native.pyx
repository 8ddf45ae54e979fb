# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler-Maruyama stepping kernels.

Mirrors ``_python.py`` operation for operation; see that module for the
shocks/recording contract.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()

BACKEND = "native"


def em_affine(x0, amat, bvec, chol, double dt, shocks, Py_ssize_t record_stride):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = \
        np.ascontiguousarray(x0, dtype=np.float64).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a = \
        np.ascontiguousarray(amat, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = \
        np.ascontiguousarray(bvec, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] lmat = \
        np.ascontiguousarray(chol, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] z = \
        np.ascontiguousarray(shocks, dtype=np.float64)
    cdef Py_ssize_t steps = z.shape[0]
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nrec = steps // record_stride
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nrec, n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xn = np.empty(n)
    cdef double sq = sqrt(dt)
    cdef Py_ssize_t k, i, j, r = 0
    cdef long bad = -1
    cdef double acc, noise
    cdef bint ok

    for k in range(steps):
        for i in range(n):
            acc = b[i]
            noise = 0.0
            for j in range(n):
                acc += a[i, j] * x[j]
                noise += lmat[i, j] * z[k, j]
            xn[i] = x[i] + acc * dt + noise * sq
        for i in range(n):
            x[i] = xn[i]
        if (k + 1) % record_stride == 0:
            ok = True
            for i in range(n):
                out[r, i] = x[i]
                if not isfinite(x[i]):
                    ok = False
            r += 1
            if bad < 0 and not ok:
                bad = k + 1
                break
    return np.asarray(out), bad


def em_cir(x0, double kappa, double theta, double sigma, double floor,
           double dt, shocks, Py_ssize_t record_stride):
    cdef double x = float(np.asarray(x0).reshape(-1)[0])
    cdef cnp.ndarray[cnp.float64_t, ndim=2] z = \
        np.ascontiguousarray(shocks, dtype=np.float64)
    cdef Py_ssize_t steps = z.shape[0]
    cdef Py_ssize_t nrec = steps // record_stride
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nrec, 1))
    cdef double sq = sqrt(dt)
    cdef Py_ssize_t k, r = 0
    cdef long bad = -1

    if x < floor:
        x = floor
    for k in range(steps):
        x = x + kappa * (theta - x) * dt + sigma * sqrt(x) * sq * z[k, 0]
        if x < floor:
            x = floor
        if (k + 1) % record_stride == 0:
            out[r, 0] = x
            r += 1
            if bad < 0 and not isfinite(x):
                bad = k + 1
                break
    return np.asarray(out), bad
