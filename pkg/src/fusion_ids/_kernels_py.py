"""Numpy implementations of the hot loops; used when the extension is not built.

Signatures and arithmetic order mirror ``_kernels.pyx``.
"""
import math

import numpy as np


def pegasos_epoch(X, y, order, w, b, t, lam, project):
    """Run Pegasos steps over ``order``; updates ``w`` in place.

    Returns the new ``(bias, step_counter)``.
    """
    radius = 1.0 / math.sqrt(lam)
    for i in order:
        x = X[i]
        yi = y[i]
        eta = 1.0 / (lam * t)
        margin = yi * (float(np.dot(w, x)) + b)
        w *= 1.0 - 1.0 / t
        if margin < 1.0:
            w += (eta * yi) * x
            b += eta * yi
        if project:
            norm = math.sqrt(float(np.dot(w, w)))
            if norm > radius:
                w *= radius / norm
        t += 1
    return b, t


def nb_log_joint(codes, logp, weights, logprior):
    """Per-record ``log P(cl) + sum_i weight_i * log P(symbol_i | cl)``.

    ``codes`` is ``(n, k)`` symbol indices, ``logp`` is ``(k, 2, width)``.
    """
    n, k = codes.shape
    out = np.empty((n, 2))
    out[:] = logprior
    for j in range(k):
        out += weights[j] * logp[j][:, codes[:, j]].T
    return out


def confusion_counts(truth, pred):
    """Counts indexed ``[truth * 2 + pred]`` for 0/1 label arrays."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    return np.bincount(truth * 2 + pred, minlength=4).astype(np.int64)
