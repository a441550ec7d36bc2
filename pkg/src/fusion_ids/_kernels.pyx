# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Same contracts as ``_kernels_py``."""
import numpy as np
from libc.math cimport sqrt


def pegasos_epoch(double[:, ::1] X, double[::1] y, long[::1] order, double[::1] w,
                  double b, long t, double lam, bint project):
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t s, j, i
    cdef double eta, yi, margin, dot, scale, norm2, radius = 1.0 / sqrt(lam)
    for s in range(n):
        i = order[s]
        yi = y[i]
        eta = 1.0 / (lam * t)
        dot = 0.0
        for j in range(d):
            dot += w[j] * X[i, j]
        margin = yi * (dot + b)
        scale = 1.0 - 1.0 / t
        for j in range(d):
            w[j] *= scale
        if margin < 1.0:
            for j in range(d):
                w[j] += (eta * yi) * X[i, j]
            b += eta * yi
        if project:
            norm2 = 0.0
            for j in range(d):
                norm2 += w[j] * w[j]
            if sqrt(norm2) > radius:
                scale = radius / sqrt(norm2)
                for j in range(d):
                    w[j] *= scale
        t += 1
    return b, t


def nb_log_joint(long[:, ::1] codes, double[:, :, ::1] logp, double[::1] weights,
                 double[::1] logprior):
    cdef Py_ssize_t n = codes.shape[0], k = codes.shape[1]
    cdef Py_ssize_t i, j, c
    out = np.empty((n, 2))
    cdef double[:, ::1] o = out
    for i in range(n):
        for c in range(2):
            o[i, c] = logprior[c]
        for j in range(k):
            for c in range(2):
                o[i, c] += weights[j] * logp[j, c, codes[i, j]]
    return out


def confusion_counts(truth, pred):
    cdef long[::1] t = np.ascontiguousarray(truth, dtype=np.int64)
    cdef long[::1] p = np.ascontiguousarray(pred, dtype=np.int64)
    counts = np.zeros(4, dtype=np.int64)
    cdef long[::1] c = counts
    cdef Py_ssize_t i
    for i in range(t.shape[0]):
        c[t[i] * 2 + p[i]] += 1
    return counts
