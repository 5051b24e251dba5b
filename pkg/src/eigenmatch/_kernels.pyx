# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch evaluation of the sign/permutation matching costs.

Each function takes M candidate parameter rows (``perms`` int64 (M, N),
``signs`` float64 (M, N)) and returns the M costs without materializing the
transformed tensors.
"""

import numpy as np


def cost_mu_batch(const double[:, :, ::1] mx, const double[:, :, ::1] my,
                  const long long[:, ::1] perms, const double[:, ::1] signs):
    cdef Py_ssize_t M = perms.shape[0], N = mx.shape[0]
    cdef Py_ssize_t m, i, j, k, pi, pj
    cdef double si, sij, d, acc
    out = np.empty(M)
    cdef double[::1] res = out
    for m in range(M):
        acc = 0.0
        for i in range(N):
            pi = perms[m, i]
            si = signs[m, i]
            for j in range(N):
                pj = perms[m, j]
                sij = si * signs[m, j]
                for k in range(N):
                    d = mx[i, j, k] - sij * signs[m, k] * my[pi, pj, perms[m, k]]
                    acc += d * d
        res[m] = acc
    return out


def cost_xi_batch(const double[:, :, :, ::1] mx, const double[:, :, :, ::1] my,
                  const long long[:, ::1] perms, const double[:, ::1] signs):
    cdef Py_ssize_t M = perms.shape[0], N = mx.shape[0], P = mx.shape[3]
    cdef Py_ssize_t m, i, j, k, p, pi, pj, pk
    cdef double sij, s, d, acc
    out = np.empty(M)
    cdef double[::1] res = out
    for m in range(M):
        acc = 0.0
        for i in range(N):
            pi = perms[m, i]
            for j in range(N):
                pj = perms[m, j]
                sij = signs[m, i] * signs[m, j]
                for k in range(N):
                    pk = perms[m, k]
                    s = sij * signs[m, k]
                    for p in range(P):
                        d = mx[i, j, k, p] - s * my[pi, pj, pk, p]
                        acc += d * d
        res[m] = acc
    return out


def cost_muS_batch(const double[:, ::1] mx, const double[:, ::1] my,
                   const long long[:, ::1] perms, const double[:, ::1] signs):
    cdef Py_ssize_t M = perms.shape[0], N = mx.shape[0], Q = mx.shape[1]
    cdef Py_ssize_t m, i, q, pi
    cdef double si, d, acc
    out = np.empty(M)
    cdef double[::1] res = out
    for m in range(M):
        acc = 0.0
        for i in range(N):
            pi = perms[m, i]
            si = signs[m, i]
            for q in range(Q):
                d = mx[i, q] - si * my[pi, q]
                acc += d * d
        res[m] = N * acc
    return out


def cost_xiS_batch(const double[:, :, :, ::1] mx, const double[:, :, :, ::1] my,
                   const long long[:, ::1] perms, const double[:, ::1] signs):
    cdef Py_ssize_t M = perms.shape[0], N = mx.shape[0], Q = mx.shape[1], P = mx.shape[3]
    cdef Py_ssize_t m, i, q, k, p, pi, pk
    cdef double s, d, acc
    out = np.empty(M)
    cdef double[::1] res = out
    for m in range(M):
        acc = 0.0
        for i in range(N):
            pi = perms[m, i]
            for q in range(Q):
                for k in range(N):
                    pk = perms[m, k]
                    s = signs[m, i] * signs[m, k]
                    for p in range(P):
                        d = mx[i, q, k, p] - s * my[pi, q, pk, p]
                        acc += d * d
        res[m] = acc
    return out
