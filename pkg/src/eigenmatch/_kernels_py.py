"""Numpy fallback for the compiled matching-cost kernels.

Same signatures and semantics as ``_kernels.pyx``; used when the extension
is not built or ``EIGENMATCH_PURE_PYTHON`` is set.
"""

import numpy as np


def cost_mu_batch(mx, my, perms, signs):
    p = perms
    t = my[p[:, :, None, None], p[:, None, :, None], p[:, None, None, :]]
    s = signs[:, :, None, None] * signs[:, None, :, None] * signs[:, None, None, :]
    d = mx[None] - s * t
    return np.einsum("mijk,mijk->m", d, d)


def cost_xi_batch(mx, my, perms, signs):
    p = perms
    t = my[p[:, :, None, None], p[:, None, :, None], p[:, None, None, :]]
    s = signs[:, :, None, None] * signs[:, None, :, None] * signs[:, None, None, :]
    d = mx[None] - s[..., None] * t
    return np.einsum("mijkp,mijkp->m", d, d)


def cost_muS_batch(mx, my, perms, signs):
    d = mx[None] - signs[:, :, None] * my[perms]
    return mx.shape[0] * np.einsum("miq,miq->m", d, d)


def cost_xiS_batch(mx, my, perms, signs):
    p = perms
    t = my[p[:, :, None, None], np.arange(mx.shape[1])[None, None, :, None], p[:, None, None, :]]
    s = signs[:, :, None, None] * signs[:, None, None, :]
    d = mx[None] - s[..., None] * t
    return np.einsum("miqkp,miqkp->m", d, d)
