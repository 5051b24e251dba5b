"""Triangle meshes and the discrete differential operators defined on them.

All operators follow the usual cotangent discretization:

* the stiffness matrix ``W`` has off-diagonal entries ``-(cot a + cot b) / 2``
  and a diagonal equal to minus the row sum, so ``W`` is symmetric positive
  semidefinite and annihilates constants;
* the lumped mass matrix holds mixed-Voronoi vertex areas (Meyer et al.),
  with the barycentric fallback for obtuse triangles;
* per-face gradients are the pseudo-inverse of the triangle Jacobian applied
  to the edge differences of the vertex values.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import DegenerateMeshError

AREA_TOL = 1e-12
LENGTH_TOL = 1e-12

# maps the three vertex values of a face to (f_j - f_i, f_k - f_i)
_D = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable oriented triangle mesh.

    Parameters
    ----------
    vertices : array_like, shape (V, 3)
    faces : array_like, shape (F, 3)
        Vertex indices; counterclockwise winding gives the outward normal.
    validate : bool
        Check index range, repeated indices, degenerate faces/edges and
        edge-manifoldness. Raises :class:`DegenerateMeshError` on failure.
    """

    vertices: np.ndarray
    faces: np.ndarray
    validate: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64, order="C")
        f = np.array(self.faces, dtype=np.int64, order="C")
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must have shape (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must have shape (F, 3), got {f.shape}")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if self.validate:
            self._check()

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @cached_property
    def bbox_diagonal(self):
        if self.n_vertices == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    @cached_property
    def _face_cross(self):
        v0, v1, v2 = (self.vertices[self.faces[:, c]] for c in range(3))
        return np.cross(v1 - v0, v2 - v0)

    @cached_property
    def face_areas(self):
        a = 0.5 * np.linalg.norm(self._face_cross, axis=1)
        a.setflags(write=False)
        return a

    @property
    def total_area(self):
        return float(self.face_areas.sum())

    @cached_property
    def edges(self):
        """Unique undirected edges as sorted vertex pairs, shape (E, 2)."""
        e = np.sort(self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def boundary_edges(self):
        e = np.sort(self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq[counts == 1]

    @property
    def mean_edge_length(self):
        e = self.edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())

    @cached_property
    def checksum(self):
        """SHA-256 over the little-endian float64 vertices and int64 faces."""
        h = hashlib.sha256()
        h.update(np.asarray(self.vertices, dtype="<f8").tobytes())
        h.update(np.asarray(self.faces, dtype="<i8").tobytes())
        return h.hexdigest()

    def _check(self):
        nv = self.n_vertices
        f = self.faces
        if f.size:
            bad = np.flatnonzero((f < 0).any(1) | (f >= nv).any(1))
            if bad.size:
                raise DegenerateMeshError(f"vertex index out of range [0, {nv})", face=int(bad[0]))
            rep = np.flatnonzero((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2]))
            if rep.size:
                raise DegenerateMeshError("repeated vertex index", face=int(rep[0]))
        if not np.all(np.isfinite(self.vertices)):
            raise DegenerateMeshError("non-finite vertex coordinates")
        diag = self.bbox_diagonal
        small = np.flatnonzero(self.face_areas <= AREA_TOL * diag**2)
        if small.size:
            raise DegenerateMeshError("zero-area face", face=int(small[0]))
        _check_edge_lengths(self)
        e = np.sort(f[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        over = np.flatnonzero(counts > 2)
        if over.size:
            raise DegenerateMeshError("non-manifold edge shared by more than two faces", edge=uniq[over[0]])

    def transformed(self, rotation=None, translation=None, flip_winding=False):
        """Return a copy with vertices mapped by ``x -> R x + t``."""
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=np.float64).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=np.float64)
        f = self.faces[:, [0, 2, 1]] if flip_winding else self.faces
        return TriMesh(v, f, validate=self.validate)

    def relabeled(self, perm):
        """Copy whose vertex ``perm[v]`` is the old vertex ``v``."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return TriMesh(self.vertices[inv], perm[self.faces], validate=self.validate)


def _check_edge_lengths(mesh):
    f = mesh.faces
    v = mesh.vertices
    tol = LENGTH_TOL * mesh.bbox_diagonal
    for a, b in ((0, 1), (1, 2), (2, 0)):
        length = np.linalg.norm(v[f[:, b]] - v[f[:, a]], axis=1)
        short = np.flatnonzero(length <= tol)
        if short.size:
            fi = int(short[0])
            raise DegenerateMeshError("zero-length edge", face=fi)


def face_normals(mesh):
    """Unit normals per face, oriented by the counterclockwise winding."""
    c = mesh._face_cross
    norm = np.linalg.norm(c, axis=1)
    small = np.flatnonzero(norm <= 2 * AREA_TOL * mesh.bbox_diagonal**2)
    if small.size:
        raise DegenerateMeshError("cannot compute normal of degenerate face", face=int(small[0]))
    return c / norm[:, None]


def _corner_cotangents(mesh):
    """Cotangent of the interior angle at each corner, shape (F, 3)."""
    v = mesh.vertices
    f = mesh.faces
    cross_norm = 2.0 * mesh.face_areas
    cots = np.empty(f.shape, dtype=np.float64)
    for c in range(3):
        p = v[f[:, c]]
        a = v[f[:, (c + 1) % 3]] - p
        b = v[f[:, (c + 2) % 3]] - p
        cots[:, c] = np.einsum("ij,ij->i", a, b) / cross_norm
    return cots


def vertex_areas(mesh):
    """Mixed-Voronoi vertex areas (diagonal of the lumped mass matrix).

    Non-obtuse triangles distribute their area by Voronoi regions; an obtuse
    triangle gives half its area to the obtuse corner and a quarter to each
    of the others. The result sums to the total surface area.
    """
    if mesh.n_faces == 0:
        raise DegenerateMeshError("mesh has no faces")
    v = mesh.vertices
    f = mesh.faces
    area = mesh.face_areas
    if np.any(area <= AREA_TOL * mesh.bbox_diagonal**2):
        raise DegenerateMeshError("face area underflow", face=int(np.argmin(area)))
    cots = _corner_cotangents(mesh)
    # squared length of the edge opposite each corner
    sq = np.empty(f.shape)
    for c in range(3):
        d = v[f[:, (c + 2) % 3]] - v[f[:, (c + 1) % 3]]
        sq[:, c] = np.einsum("ij,ij->i", d, d)

    corner = np.empty(f.shape)
    for c in range(3):
        j, k = (c + 1) % 3, (c + 2) % 3
        # edge c-j is opposite corner k, edge c-k is opposite corner j
        corner[:, c] = (sq[:, k] * cots[:, k] + sq[:, j] * cots[:, j]) / 8.0

    obtuse = cots < 0.0
    any_obtuse = obtuse.any(axis=1)
    fallback = np.where(obtuse, area[:, None] / 2.0, area[:, None] / 4.0)
    corner[any_obtuse] = fallback[any_obtuse]

    out = np.zeros(mesh.n_vertices)
    np.add.at(out, f.ravel(), corner.ravel())
    if np.any(out <= 0):
        isolated = int(np.flatnonzero(out <= 0)[0])
        raise DegenerateMeshError(f"vertex {isolated} has no incident area")
    return out


def mass_matrix(mesh):
    return sparse.diags(vertex_areas(mesh)).tocsr()


def cotan_matrix(mesh):
    """Symmetric PSD cotangent stiffness matrix (CSR, V x V).

    Boundary edges receive the single available cotangent.
    """
    _check_edge_lengths(mesh)
    f = mesh.faces
    cots = _corner_cotangents(mesh)
    rows, cols, vals = [], [], []
    for c in range(3):
        i = f[:, (c + 1) % 3]
        j = f[:, (c + 2) % 3]
        w = -0.5 * cots[:, c]
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = mesh.n_vertices
    off = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    off.sum_duplicates()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    W = (off + sparse.diags(diag)).tocsr()
    W.sort_indices()
    return W


def gradient_operator(mesh):
    """Per-face 3x3 matrices mapping corner values to the face gradient.

    Implements ``grad = J^T (J J^T)^{-1} D`` where the rows of ``J`` are the
    two edge vectors leaving the first corner.
    """
    v = mesh.vertices
    f = mesh.faces
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e2 = v[f[:, 2]] - v[f[:, 0]]
    g11 = np.einsum("ij,ij->i", e1, e1)
    g12 = np.einsum("ij,ij->i", e1, e2)
    g22 = np.einsum("ij,ij->i", e2, e2)
    det = g11 * g22 - g12 * g12
    tol = 4.0 * (AREA_TOL * mesh.bbox_diagonal**2) ** 2
    bad = np.flatnonzero(det <= tol)
    if bad.size:
        raise DegenerateMeshError("collinear triangle, Jacobian is rank deficient", face=int(bad[0]))
    inv = np.empty((f.shape[0], 2, 2))
    inv[:, 0, 0] = g22 / det
    inv[:, 0, 1] = -g12 / det
    inv[:, 1, 0] = -g12 / det
    inv[:, 1, 1] = g11 / det
    jt = np.stack([e1, e2], axis=2)  # (F, 3, 2)
    return jt @ inv @ _D


def face_gradient(mesh, values, operator=None):
    """Gradient of piecewise-linear vertex functions, one vector per face.

    ``values`` of shape (V,) gives (F, 3); shape (V, k) gives (F, k, 3).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != mesh.n_vertices:
        raise ValueError(f"expected {mesh.n_vertices} vertex values, got {values.shape[0]}")
    G = gradient_operator(mesh) if operator is None else operator
    corner = values[mesh.faces]  # (F, 3) or (F, 3, k)
    if values.ndim == 1:
        return np.einsum("fac,fc->fa", G, corner)
    return np.einsum("fac,fck->fka", G, corner)


def face_average(mesh, values):
    """Mean of the three corner values on each face."""
    values = np.asarray(values, dtype=np.float64)
    return values[mesh.faces].mean(axis=1)
