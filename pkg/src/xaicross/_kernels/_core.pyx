# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled lane for the hot kernels. Contracts match ``_pure``."""

from libc.math cimport exp

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


cdef inline double _sigmoid(double r) noexcept nogil:
    cdef double e
    if r >= 0.0:
        return 1.0 / (1.0 + exp(-r))
    e = exp(r)
    return e / (1.0 + e)


cdef inline double _route(const cnp.int32_t[::1] feature,
                          const double[::1] threshold,
                          const cnp.int32_t[::1] left,
                          const cnp.int32_t[::1] right,
                          const double[::1] value,
                          int node,
                          const double* x) noexcept nogil:
    while feature[node] >= 0:
        if x[feature[node]] < threshold[node]:
            node = left[node]
        else:
            node = right[node]
    return value[node]


cdef inline double _raw_one(const cnp.int32_t[::1] feature,
                            const double[::1] threshold,
                            const cnp.int32_t[::1] left,
                            const cnp.int32_t[::1] right,
                            const double[::1] value,
                            const cnp.int32_t[::1] roots,
                            double base_score,
                            const double* x) noexcept nogil:
    cdef double acc = base_score
    cdef Py_ssize_t t
    for t in range(roots.shape[0]):
        acc += _route(feature, threshold, left, right, value, roots[t], x)
    return acc


def sigmoid(raw):
    raw = np.ascontiguousarray(raw, dtype=np.float64)
    out = np.empty_like(raw)
    cdef double[::1] rv = raw.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(rv.shape[0]):
            ov[i] = _sigmoid(rv[i])
    return out


def predict_raw(cnp.int32_t[::1] feature, double[::1] threshold,
                cnp.int32_t[::1] left, cnp.int32_t[::1] right,
                double[::1] value, cnp.int32_t[::1] roots,
                double base_score, X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] Xv = X
    cdef Py_ssize_t n = Xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            ov[i] = _raw_one(feature, threshold, left, right, value, roots,
                             base_score, &Xv[i, 0])
    return out


def coalition_values(cnp.int32_t[::1] feature, double[::1] threshold,
                     cnp.int32_t[::1] left, cnp.int32_t[::1] right,
                     double[::1] value, cnp.int32_t[::1] roots,
                     double base_score, x, background, masks, bint proba):
    x = np.ascontiguousarray(x, dtype=np.float64)
    background = np.ascontiguousarray(background, dtype=np.float64)
    masks = np.ascontiguousarray(masks, dtype=np.uint8)
    cdef double[::1] xv = x
    cdef double[:, ::1] bg = background
    cdef unsigned char[:, ::1] mk = masks
    cdef Py_ssize_t n_masks = mk.shape[0]
    cdef Py_ssize_t m = bg.shape[0]
    cdef Py_ssize_t d = bg.shape[1]
    out = np.empty(n_masks, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] hybrid = np.empty(d, dtype=np.float64)
    cdef Py_ssize_t k, b, j
    cdef double acc, r
    with nogil:
        for k in range(n_masks):
            acc = 0.0
            for b in range(m):
                for j in range(d):
                    if mk[k, j]:
                        hybrid[j] = xv[j]
                    else:
                        hybrid[j] = bg[b, j]
                r = _raw_one(feature, threshold, left, right, value, roots,
                             base_score, &hybrid[0])
                acc += _sigmoid(r) if proba else r
            ov[k] = acc / m
    return out


def permutation_contributions(cnp.int32_t[::1] feature, double[::1] threshold,
                              cnp.int32_t[::1] left, cnp.int32_t[::1] right,
                              double[::1] value, cnp.int32_t[::1] roots,
                              double base_score, x, background, perms,
                              bint proba):
    x = np.ascontiguousarray(x, dtype=np.float64)
    background = np.ascontiguousarray(background, dtype=np.float64)
    perms = np.ascontiguousarray(perms, dtype=np.int32)
    cdef double[::1] xv = x
    cdef double[:, ::1] bg = background
    cdef cnp.int32_t[:, ::1] pe = perms
    cdef Py_ssize_t n_perm = pe.shape[0]
    cdef Py_ssize_t d = pe.shape[1]
    cdef Py_ssize_t m = bg.shape[0]

    contrib_sum = np.zeros(d, dtype=np.float64)
    contrib_sumsq = np.zeros(d, dtype=np.float64)
    cdef double[::1] cs = contrib_sum
    cdef double[::1] cq = contrib_sumsq
    cdef double[::1] contrib = np.empty(d, dtype=np.float64)
    cdef double[::1] z = np.empty(d, dtype=np.float64)
    cdef Py_ssize_t p, b, t, j
    cdef double prev, cur, r, c
    with nogil:
        for p in range(n_perm):
            for j in range(d):
                contrib[j] = 0.0
            for b in range(m):
                for j in range(d):
                    z[j] = bg[b, j]
                r = _raw_one(feature, threshold, left, right, value, roots,
                             base_score, &z[0])
                prev = _sigmoid(r) if proba else r
                for t in range(d):
                    j = pe[p, t]
                    z[j] = xv[j]
                    r = _raw_one(feature, threshold, left, right, value, roots,
                                 base_score, &z[0])
                    cur = _sigmoid(r) if proba else r
                    contrib[j] += cur - prev
                    prev = cur
            for j in range(d):
                c = contrib[j] / m
                cs[j] += c
                cq[j] += c * c
    return contrib_sum, contrib_sumsq
