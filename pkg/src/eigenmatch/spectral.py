"""Laplace-Beltrami eigenbasis, diffusion maps and heat kernel signatures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg as sla
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedMeshError, SolverError
from .mesh_core import cotan_matrix, vertex_areas

DENSE_LIMIT = 3000
DEGENERACY_RTOL = 1e-3
ZERO_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ascending eigenpairs of ``W phi = lambda A phi``.

    ``eigenfunctions`` has shape (V, h) and is mass-orthonormal:
    ``phi.T @ diag(mass) @ phi = I``.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    mass: np.ndarray
    degenerate_pairs: tuple = field(default=())

    @property
    def h(self):
        return self.eigenvalues.shape[0]

    @property
    def n_vertices(self):
        return self.eigenfunctions.shape[0]

    @property
    def total_area(self):
        return float(self.mass.sum())

    def truncated(self, n):
        if n > self.h:
            raise ValueError(f"requested {n} eigenpairs, basis holds {self.h}")
        pairs = tuple((i, j) for i, j in self.degenerate_pairs if j < n)
        return SpectralBasis(self.eigenvalues[:n], self.eigenfunctions[:, :n], self.mass, pairs)


@dataclass(frozen=True, eq=False)
class SignatureField:
    """Per-vertex signature channels ``values`` (V, Q) sampled at ``times``."""

    values: np.ndarray
    times: np.ndarray

    @property
    def Q(self):
        return self.values.shape[1]


def _normalize_signs(phi):
    # largest-magnitude entry positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[idx, np.arange(phi.shape[1])])
    signs[signs == 0] = 1.0
    return phi * signs


def _degenerate_pairs(evals):
    pairs = []
    for i in range(1, len(evals) - 1):
        j = i + 1
        if abs(evals[j] - evals[i]) < DEGENERACY_RTOL * evals[j]:
            pairs.append((i, j))
    return tuple(pairs)


def compute_basis(mesh, h, dense_limit=DENSE_LIMIT):
    """Solve for the ``h`` smallest eigenpairs of the cotangent Laplacian.

    Dense generalized symmetric solve below ``dense_limit`` vertices,
    shift-invert Lanczos above. The first eigenfunction is replaced by the
    exact constant ``1/sqrt(area)``; every other eigenfunction is sign
    normalized so that its largest-magnitude entry is positive.
    """
    n = mesh.n_vertices
    if not 1 <= h < n:
        raise ValueError(f"need 1 <= h < vertex count ({n}), got h={h}")
    W = cotan_matrix(mesh)
    mass = vertex_areas(mesh)
    ncomp, _ = connected_components(W, directed=False)
    if ncomp > 1:
        raise DisconnectedMeshError(f"mesh has {ncomp} connected components")

    try:
        if n <= dense_limit:
            evals, evecs = scipy.linalg.eigh(W.toarray(), np.diag(mass), subset_by_index=[0, h - 1])
        else:
            sigma = -1e-6 * float(W.diagonal().mean() / mass.mean())
            evals, evecs = sla.eigsh(W.tocsc(), k=h, M=scipy.sparse.diags(mass).tocsc(),
                                     sigma=sigma, which="LM")
            order = np.argsort(evals)
            evals, evecs = evals[order], evecs[:, order]
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, sla.ArpackError) as exc:
        raise SolverError(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(evals)):
        raise SolverError("eigensolver returned non-finite eigenvalues")

    scale = max(abs(evals[-1]), 1.0)
    if np.any(evals < -ZERO_RTOL * scale):
        raise SolverError(f"negative eigenvalue {evals.min():.3e}")
    if h >= 3 and evals[1] <= ZERO_RTOL * evals[2]:
        raise DisconnectedMeshError("second eigenvalue is numerically zero")

    evecs = np.array(evecs, dtype=np.float64)
    # re-orthonormalize in the mass inner product (cheap, h x h)
    gram = evecs.T @ (mass[:, None] * evecs)
    L = np.linalg.cholesky(gram)
    evecs = np.linalg.solve(L, evecs.T).T
    area = mass.sum()
    const = np.full(n, 1.0 / np.sqrt(area))
    rest = evecs[:, 1:]
    rest = rest - np.outer(const, const @ (mass[:, None] * rest))
    evecs = np.column_stack([const, _normalize_signs(rest)])
    evals = np.maximum(np.asarray(evals, dtype=np.float64), 0.0)
    evals[0] = 0.0
    evecs.setflags(write=False)
    evals.setflags(write=False)
    return SpectralBasis(evals, evecs, mass, _degenerate_pairs(evals))


def diffusion_map(basis, t, N):
    """Diffusion coordinates ``exp(-lambda_i t) phi_i(x)`` for i < N, shape (V, N)."""
    if N > basis.h:
        raise ValueError(f"N={N} exceeds basis size {basis.h}")
    return basis.eigenfunctions[:, :N] * np.exp(-basis.eigenvalues[:N] * t)


def diffusion_distance(basis, t, x, y, N):
    """Truncated diffusion distance between vertices ``x`` and ``y``."""
    if N > basis.h:
        raise ValueError(f"N={N} exceeds basis size {basis.h}")
    diff = basis.eigenfunctions[x, :N] - basis.eigenfunctions[y, :N]
    return float(np.sqrt(np.sum(np.exp(-2.0 * basis.eigenvalues[:N] * t) * diff * diff)))


def hks(basis, t):
    """Heat kernel signature at time ``t`` using all eigenpairs of ``basis``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return (basis.eigenfunctions**2) @ np.exp(-basis.eigenvalues * t)


def hks_times(first_nonzero, Q):
    """Log-spaced times from ``1/(50 lam)`` to ``1/lam``."""
    return np.geomspace(1.0 / (50.0 * first_nonzero), 1.0 / first_nonzero, Q)


def hks_derivative_signature(basis, Q=6, h=30):
    """Mass-normalized time derivative of the HKS at ``Q`` log-spaced times.

    The time range is set by the first nonzero eigenvalue.
    """
    if h > basis.h:
        raise ValueError(f"h={h} exceeds basis size {basis.h}")
    if Q < 1:
        raise ValueError("Q must be at least 1")
    lam = basis.eigenvalues[:h]
    phi2 = basis.eigenfunctions[:, :h] ** 2
    nonzero = lam[lam > ZERO_RTOL * lam[-1]]
    if h < 2 or nonzero.size == 0:
        raise DisconnectedMeshError("no nonzero eigenvalue available for the HKS time scale")
    times = hks_times(float(nonzero[0]), Q)
    raw = phi2 @ (-lam[:, None] * np.exp(-lam[:, None] * times[None, :]))
    return SignatureField(normalize_fields(raw, basis.mass), times)


def normalize_fields(values, mass):
    """Scale each column to unit L2 norm in the mass inner product."""
    values = np.asarray(values, dtype=np.float64)
    norms = np.sqrt(mass @ values**2)
    if np.any(norms == 0):
        raise ValueError("cannot normalize an identically zero field")
    return values / norms
