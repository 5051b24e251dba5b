"""Feature-point correspondence from matched eigenfunctions and HKS derivatives."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, MeshMismatchError

DEFAULT_BETA = 0.5


def _block_rms(block, mass):
    # mass-weighted RMS over all entries of a (V, c) block
    ms = (mass @ (block**2)).sum() / (mass.sum() * block.shape[1])
    return float(np.sqrt(ms))


def descriptor_field(basis, matched_stack, sig, beta=DEFAULT_BETA):
    """Per-vertex descriptors ``[beta * spectral, (1 - beta) * signature]``.

    Each block is divided by its mass-weighted RMS before blending, so the
    two parts are commensurate. Returns shape (V, N + Q).
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    spectral = np.asarray(matched_stack, dtype=np.float64)
    signature = np.asarray(sig.values, dtype=np.float64)
    nv = basis.n_vertices
    if spectral.shape[0] != nv or signature.shape[0] != nv:
        raise MeshMismatchError(
            f"vertex counts differ: basis {nv}, stack {spectral.shape[0]}, signature {signature.shape[0]}")
    parts = []
    for block, weight in ((spectral, beta), (signature, 1.0 - beta)):
        rms = _block_rms(block, basis.mass)
        parts.append(weight * block / rms if rms > 0 else np.zeros_like(block))
    out = np.hstack(parts)
    if not np.all(np.isfinite(out)):
        raise ValueError("descriptor contains non-finite entries")
    return out


def match_points(src, field_x, field_y):
    """Nearest descriptor on Y for each source vertex of X (exact linear scan).

    Returns ``[(src_vertex, dst_vertex, distance)]``; ties go to the lowest
    Y vertex index.
    """
    field_x = np.asarray(field_x, dtype=np.float64)
    field_y = np.asarray(field_y, dtype=np.float64)
    if field_x.ndim != 2 or field_y.ndim != 2 or field_x.shape[1] != field_y.shape[1]:
        raise DimensionMismatchError(
            f"descriptor widths differ: {field_x.shape} vs {field_y.shape}")
    src = [int(s) for s in src]
    if not src:
        raise ValueError("no source points given")
    out = []
    for s in src:
        d = np.sqrt(((field_y - field_x[s]) ** 2).sum(axis=1))
        j = int(np.argmin(d))
        out.append((s, j, float(d[j])))
    return out


def farthest_point_sampling(mesh, k, start=0):
    """``k`` vertices spread by greedy farthest-point selection (Euclidean)."""
    v = mesh.vertices
    if not 0 < k <= mesh.n_vertices:
        raise ValueError(f"k must lie in [1, {mesh.n_vertices}]")
    chosen = [int(start)]
    dist = np.linalg.norm(v - v[start], axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(v - v[nxt], axis=1))
    return chosen
