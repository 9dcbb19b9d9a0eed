# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels; semantics mirror ``_solve_py`` exactly.

The coordinate loop stays in C; the size-n matrix-vector product goes
through BLAS (zgemv) so large problems run at library speed.
"""

from libc.math cimport sqrt

import numpy as np

from scipy.linalg.cython_blas cimport zgemv

BACKEND = "cython"


def bcd_sweep(double complex[:, ::1] U, double complex[:, ::1] Q,
              double nu, long long[::1] order):
    """One block-coordinate descent pass over ``order``; updates U in place."""
    cdef int n = U.shape[0]
    cdef double complex[::1] w = np.empty(n, dtype=complex)
    cdef double complex alpha = 1.0 + 0.0j
    cdef double complex beta = 0.0 + 0.0j
    cdef int inc1 = 1
    cdef int k, j, i
    cdef long long oi
    cdef double gamma, scale
    cdef double complex qii, ci

    for j in range(order.shape[0]):
        oi = order[j]
        i = <int> oi
        # w = U @ Q[:, i]; row-major U is the transpose of a Fortran matrix,
        # so ask BLAS for the transposed product. Column stride of Q is n.
        zgemv("T", &n, &n, &alpha, &U[0, 0], &n, &Q[0, i], &n, &beta, &w[0], &inc1)
        qii = Q[i, i]
        gamma = 0.0
        for k in range(n):
            if k != i:
                ci = w[k] - U[k, i] * qii
                w[k] = ci
                gamma += ci.real * Q[k, i].real + ci.imag * Q[k, i].imag
        if gamma > 0.0:
            scale = -sqrt((1.0 - nu) / gamma)
            for k in range(n):
                if k != i:
                    ci = scale * w[k]
                    U[k, i] = ci
                    U[i, k] = ci.conjugate()
        else:
            for k in range(n):
                if k != i:
                    U[k, i] = 0.0
                    U[i, k] = 0.0
        U[i, i] = 1.0


def greedy_sweep(double complex[::1] u, double complex[:, ::1] Q,
                 long long[::1] order):
    """One greedy coordinate-minimization pass; updates u in place."""
    cdef int n = u.shape[0]
    cdef int k, i
    cdef long long oi
    cdef int j
    cdef double complex w
    cdef double a

    for j in range(order.shape[0]):
        oi = order[j]
        i = <int> oi
        w = 0.0
        for k in range(n):
            if k != i:
                w = w + Q[i, k] * u[k]
        a = sqrt(w.real * w.real + w.imag * w.imag)
        if a > 0.0:
            u[i] = -w / a
