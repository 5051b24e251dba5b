"""Procedural test meshes: spheres, flat grids, blobs and bendable bars."""

from __future__ import annotations

import numpy as np

from .mesh_core import TriMesh

_PHI = (1.0 + 5.0**0.5) / 2.0

_ICO_VERTS = [
    (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
    (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
    (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
]
_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(subdivisions=3, radius=1.0):
    """Subdivided icosahedron projected on a sphere.

    ``subdivisions=3`` gives 642 vertices, ``4`` gives 2562. The vertex set
    is exactly symmetric under each coordinate mirror.
    """
    verts = [np.array(v, dtype=float) for v in _ICO_VERTS]
    verts = [v / np.linalg.norm(v) for v in verts]
    faces = list(_ICO_FACES)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = (verts[a] + verts[b]) / 2.0
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return TriMesh(radius * np.array(verts), np.array(faces))


def square_grid(n=16, size=1.0):
    """Flat ``size x size`` grid in the z=0 plane with ``n x n`` cells.

    Every cell is split along the same diagonal; normals point to +z.
    """
    xs = np.linspace(0.0, size, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    faces = []
    for r in range(n):
        for c in range(n):
            a = r * (n + 1) + c
            b, d = a + 1, a + n + 1
            faces += [(a, b, d + 1), (a, d + 1, d)]
    return TriMesh(verts, np.array(faces))


def radial_deform(mesh, fn):
    """Scale each vertex by ``fn(unit_direction)`` (star-shaped meshes)."""
    v = mesh.vertices
    u = v / np.linalg.norm(v, axis=1, keepdims=True)
    return TriMesh(u * fn(u)[:, None], mesh.faces)


def asymmetric_blob(subdivisions=3, seed=0, amplitude=0.12):
    """Star-shaped blob without intrinsic symmetries.

    Anisotropic scaling separates the low eigenvalues; a random smooth
    radial perturbation breaks every mirror and rotation symmetry.
    """
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(6, 3))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    weights = rng.uniform(0.5, 1.0, size=6) * rng.choice([-1.0, 1.0], size=6)

    def bumps(u):
        return 1.0 + amplitude * (weights * np.exp(2.0 * (u @ centers.T - 1.0))).sum(1)

    sphere = radial_deform(icosphere(subdivisions), bumps)
    return TriMesh(sphere.vertices * np.array([1.0, 1.35, 1.8]), sphere.faces)


def mirror_blob(subdivisions=3):
    """Blob whose only symmetry is the mirror ``x -> -x``.

    Vertex ``mirror_map(mesh)[v]`` is the exact reflection of vertex ``v``.
    """
    def r(u):
        x, y, z = u.T
        return 1.0 + 0.25 * y + 0.12 * z + 0.15 * y * z + 0.2 * x * x

    blob = radial_deform(icosphere(subdivisions), r)
    return TriMesh(blob.vertices * np.array([0.8, 1.5, 1.1]), blob.faces)


def mirror_map(mesh, axis=0, tol=1e-12):
    """Vertex permutation induced by reflecting ``axis`` (exact matches only)."""
    v = mesh.vertices
    refl = v.copy()
    refl[:, axis] *= -1.0
    order = np.lexsort(v.T[::-1])
    order_r = np.lexsort(refl.T[::-1])
    out = np.empty(mesh.n_vertices, dtype=np.int64)
    out[order_r] = order
    if np.max(np.abs(v[out] - refl)) > tol * max(1.0, mesh.bbox_diagonal):
        raise ValueError("mesh is not mirror symmetric")
    return out


def tapered_bar(subdivisions=3, length=2.2):
    """Elongated asymmetric bar obtained by stretching a sphere along x."""
    s = icosphere(subdivisions).vertices
    x, y, z = s.T
    xb = length * x
    yb = (0.42 + 0.1 * x) * y + 0.06 * z * z
    zb = (0.3 + 0.06 * x * x) * z + 0.08 * y * y + 0.04 * x * y
    return TriMesh(np.column_stack([xb, yb, zb]), icosphere(subdivisions).faces)


def bend(mesh, radius):
    """Wrap the x axis around a circle of the given radius in the x-z plane.

    Lengths along the centerline are preserved, so thin shapes deform
    nearly isometrically.
    """
    x, y, z = mesh.vertices.T
    theta = x / radius
    r = radius - z
    return TriMesh(np.column_stack([r * np.sin(theta), y, radius - r * np.cos(theta)]), mesh.faces)
