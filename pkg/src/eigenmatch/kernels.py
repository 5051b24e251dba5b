"""Backend selection for the matching-cost kernels.

The compiled extension is used when importable; setting the environment
variable ``EIGENMATCH_PURE_PYTHON=1`` forces the numpy implementation.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("EIGENMATCH_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

_NAMES = ("cost_mu_batch", "cost_xi_batch", "cost_muS_batch", "cost_xiS_batch")


def get_backend(name=None):
    """Module implementing the kernels: ``"cython"``, ``"python"`` or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def prepare(perms, signs):
    perms = np.ascontiguousarray(np.atleast_2d(perms), dtype=np.int64)
    signs = np.ascontiguousarray(np.atleast_2d(signs), dtype=np.float64)
    if perms.shape != signs.shape:
        raise ValueError("perms and signs must have the same shape")
    return perms, signs


def _wrap(name):
    def call(mx, my, perms, signs, backend=None):
        perms, signs = prepare(perms, signs)
        impl = get_backend(backend)
        return getattr(impl, name)(np.ascontiguousarray(mx), np.ascontiguousarray(my), perms, signs)

    call.__name__ = name
    return call


cost_mu_batch = _wrap("cost_mu_batch")
cost_xi_batch = _wrap("cost_xi_batch")
cost_muS_batch = _wrap("cost_muS_batch")
cost_xiS_batch = _wrap("cost_xiS_batch")
