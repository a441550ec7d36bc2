"""Kernel backend selection.

The compiled extension is used when importable; setting ``FUSION_IDS_PURE=1``
forces the numpy fallback.  Callers pass C-contiguous float64/int64 arrays.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("FUSION_IDS_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython', 'python' or None for the default)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def pegasos_epoch(X, y, order, w, b, t, lam, project, backend=None):
    impl = get_backend(backend)
    return impl.pegasos_epoch(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(order, dtype=np.int64),
        w, float(b), int(t), float(lam), bool(project),
    )


def nb_log_joint(codes, logp, weights, logprior, backend=None):
    impl = get_backend(backend)
    return impl.nb_log_joint(
        np.ascontiguousarray(codes, dtype=np.int64),
        np.ascontiguousarray(logp, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(logprior, dtype=np.float64),
    )


def confusion_counts(truth, pred, backend=None):
    return get_backend(backend).confusion_counts(truth, pred)
