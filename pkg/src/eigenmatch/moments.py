"""Raw-moment statistics of a shape's eigenfunctions.

Vertex quantities (``mu``, ``muS``) are integrated with the lumped mass
matrix. Quantities involving gradients (``xi``, ``xiS``) are integrated over
faces with face areas, using face-averaged eigenfunction values for the
``phi_k w_p(|phi_k|)`` factor.

Index layout (0-based):

* ``mu[i, j, k]``       = E[phi_i phi_j phi_k]
* ``xi[i, j, k, p]``    = E[nu_ij phi_k w_p(|phi_k|)],  nu_ij = (grad phi_i x grad phi_j) . n
* ``muS[i, q]``         = E[phi_i psi_q]
* ``xiS[i, q, k, p]``   = E[nuS_iq phi_k w_p(|phi_k|)], nuS_iq = (grad phi_i x grad psi_q) . n
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStatisticsError, MeshMismatchError
from .mesh_core import face_average, face_gradient, face_normals, gradient_operator

P_DEFAULT = 2


@dataclass(frozen=True)
class WeightConfig:
    """Soft-threshold region weights ``w_0`` (ramp up) and ``w_1 = 1 - w_0``."""

    TH: float
    P: int = P_DEFAULT

    def __post_init__(self):
        if self.P != 2:
            raise ValueError("only the P=2 soft-threshold pair is supported")
        if not self.TH > 0:
            raise ValueError("TH must be positive")

    @classmethod
    def for_area(cls, total_area):
        return cls(TH=0.1 / np.sqrt(total_area))


def weight_function(p, z, cfg):
    """Region weight ``w_p(|z|)``; works elementwise on arrays."""
    z = np.abs(np.asarray(z, dtype=np.float64))
    w0 = np.clip((z - cfg.TH) / cfg.TH, 0.0, 1.0)
    if p == 0:
        return w0
    if p == 1:
        return 1.0 - w0
    raise ValueError(f"weight index must be 0 or 1, got {p}")


def region_weights(values, cfg):
    """Stack ``w_p(|values|)`` along a new trailing axis of length P."""
    return np.stack([weight_function(p, values, cfg) for p in range(cfg.P)], axis=-1)


@dataclass(frozen=True, eq=False)
class MomentSet:
    mu: np.ndarray
    xi: np.ndarray
    muS: np.ndarray
    xiS: np.ndarray
    alpha: float
    TH: float

    @property
    def N(self):
        return self.mu.shape[0]

    @property
    def P(self):
        return self.xi.shape[3]

    @property
    def Q(self):
        return self.muS.shape[1]


def _check_vertices(basis, n, what):
    if n != basis.n_vertices:
        raise MeshMismatchError(f"{what} has {n} vertices, basis has {basis.n_vertices}")


def compute_mu(basis, N):
    phi = basis.eigenfunctions[:, :N]
    return np.einsum("v,vi,vj,vk->ijk", basis.mass, phi, phi, phi, optimize=True)


def compute_muS(basis, sig, N):
    _check_vertices(basis, sig.values.shape[0], "signature")
    return basis.eigenfunctions[:, :N].T @ (basis.mass[:, None] * sig.values)


def _rotated_gradients(grads, normals):
    """``grad x n`` per face; grads has shape (F, k, 3)."""
    return np.cross(grads, normals[:, None, :])


def compute_nu(mesh, basis, i, j):
    """Per-face ``(grad phi_i x grad phi_j) . n``."""
    _check_vertices(basis, mesh.n_vertices, "mesh")
    phi = basis.eigenfunctions
    n = face_normals(mesh)
    gi = face_gradient(mesh, phi[:, i])
    gj = face_gradient(mesh, phi[:, j])
    # antisymmetrized so that nu_ii = 0 and nu_ji = -nu_ij hold exactly
    a = np.einsum("fa,fa->f", gi, np.cross(gj, n))
    b = np.einsum("fa,fa->f", gj, np.cross(gi, n))
    return 0.5 * (a - b)


def _nu_tensor(g_left, g_right, normals, antisymmetrize=False):
    nu = np.einsum("fia,fja->fij", g_left, _rotated_gradients(g_right, normals))
    if antisymmetrize:
        nu = 0.5 * (nu - nu.transpose(0, 2, 1))
    return nu


def _region_factor(mesh, basis, cfg, N):
    phibar = face_average(mesh, basis.eigenfunctions[:, :N])  # (F, N)
    return phibar[:, :, None] * region_weights(phibar, cfg)  # (F, N, P)


def compute_xi(mesh, basis, cfg, N, _op=None):
    _check_vertices(basis, mesh.n_vertices, "mesh")
    op = gradient_operator(mesh) if _op is None else _op
    normals = face_normals(mesh)
    g = face_gradient(mesh, basis.eigenfunctions[:, :N], operator=op)
    nu = _nu_tensor(g, g, normals, antisymmetrize=True)
    return np.einsum("f,fij,fkp->ijkp", mesh.face_areas, nu, _region_factor(mesh, basis, cfg, N),
                     optimize=True)


def compute_xiS(mesh, basis, sig, cfg, N, _op=None):
    _check_vertices(basis, mesh.n_vertices, "mesh")
    _check_vertices(basis, sig.values.shape[0], "signature")
    op = gradient_operator(mesh) if _op is None else _op
    normals = face_normals(mesh)
    g = face_gradient(mesh, basis.eigenfunctions[:, :N], operator=op)
    gs = face_gradient(mesh, sig.values, operator=op)
    nuS = _nu_tensor(g, gs, normals)
    return np.einsum("f,fiq,fkp->iqkp", mesh.face_areas, nuS, _region_factor(mesh, basis, cfg, N),
                     optimize=True)


def alpha_from(mu, muS, xi, xiS):
    N = mu.shape[0]
    num = np.sum(mu**2) + N * np.sum(muS**2)
    den = np.sum(xi**2) + np.sum(xiS**2)
    if den < 1e-30:
        raise DegenerateStatisticsError(f"gradient moments vanish (sum of squares {den:.3e})")
    return float(num / den)


def compute_alpha(m):
    """Balance weight between value moments and gradient moments of one shape."""
    return alpha_from(m.mu, m.muS, m.xi, m.xiS)


def compute_moments(mesh, basis, sig, N, cfg=None):
    """All four moment tensors plus ``alpha`` for one shape."""
    if N > basis.h:
        raise ValueError(f"N={N} exceeds basis size {basis.h}")
    _check_vertices(basis, mesh.n_vertices, "mesh")
    if cfg is None:
        cfg = WeightConfig.for_area(basis.total_area)
    op = gradient_operator(mesh)
    mu = compute_mu(basis, N)
    muS = compute_muS(basis, sig, N)
    xi = compute_xi(mesh, basis, cfg, N, _op=op)
    xiS = compute_xiS(mesh, basis, sig, cfg, N, _op=op)
    return MomentSet(mu, xi, muS, xiS, alpha_from(mu, muS, xi, xiS), cfg.TH)
