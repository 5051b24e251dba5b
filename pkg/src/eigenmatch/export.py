"""Diverging red-blue coloring of per-vertex fields and segment export."""

import numpy as np

NEUTRAL = (255, 255, 255)


def diverging_colors(field):
    """Map a field to RGB: positive to red, negative to blue, zero to white.

    Values are scaled by ``max |field|`` so the palette is symmetric:
    negating the field swaps the red and blue channels. A field without
    variation carries no sign pattern and maps uniformly to neutral.
    """
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("field must be one-dimensional")
    out = np.empty((f.size, 3), dtype=np.uint8)
    out[:] = NEUTRAL
    scale = np.max(np.abs(f)) if f.size else 0.0
    if f.size == 0 or scale == 0 or np.ptp(f) == 0:
        return out
    x = np.clip(f / scale, -1.0, 1.0)
    fade = np.rint(255.0 * (1.0 - np.abs(x))).astype(np.uint8)
    pos = x > 0
    neg = x < 0
    out[pos, 1] = fade[pos]
    out[pos, 2] = fade[pos]
    out[neg, 0] = fade[neg]
    out[neg, 1] = fade[neg]
    return out


def format_segments_obj(mesh_x, mesh_y, rows, offset=None):
    """OBJ text with both meshes' matched points joined by line segments.

    Y is shifted by ``offset`` (default: 1.5 bounding-box widths along x).
    """
    if offset is None:
        width = float(np.ptp(mesh_x.vertices[:, 0])) if mesh_x.n_vertices else 0.0
        offset = np.array([1.5 * width + mesh_x.bbox_diagonal * 0.1, 0.0, 0.0])
    lines = ["# matched feature points: X vertex -> Y vertex"]
    for s, d, _ in rows:
        p = mesh_x.vertices[s]
        q = mesh_y.vertices[d] + offset
        lines.append("v {!r} {!r} {!r}".format(*p.tolist()))
        lines.append("v {!r} {!r} {!r}".format(*q.tolist()))
    for n in range(len(rows)):
        lines.append(f"l {2 * n + 1} {2 * n + 2}")
    return "\n".join(lines) + "\n"
