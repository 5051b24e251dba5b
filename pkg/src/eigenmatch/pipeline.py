"""End-to-end helpers shared by the CLI and the acceptance suite."""

from __future__ import annotations

from .correspondence import DEFAULT_BETA, descriptor_field, match_points
from .errors import DimensionMismatchError
from .matching import DEFAULT_K, apply_match, degeneracy_warnings, match
from .moments import P_DEFAULT, WeightConfig, compute_moments
from .persist import ShapeData
from .spectral import compute_basis, hks_derivative_signature

DEFAULTS = {"N": 10, "h": 30, "Q": 6, "P": P_DEFAULT, "beta": DEFAULT_BETA, "K": DEFAULT_K}


def decompose(mesh, N=10, h=30, Q=6):
    """Eigenbasis, HKS-derivative signature and moments of one shape."""
    if not 0 < N:
        raise ValueError("N must be positive")
    basis = compute_basis(mesh, max(N, h))
    sig = hks_derivative_signature(basis, Q=Q, h=h)
    cfg = WeightConfig.for_area(basis.total_area)
    moments = compute_moments(mesh, basis, sig, N, cfg)
    config = {"N": N, "h": h, "Q": Q, "P": cfg.P, "TH": cfg.TH}
    return ShapeData(basis, sig, moments, mesh.checksum, config)


def match_shapes(sx, sy, K=DEFAULT_K, alpha=None):
    if sx.moments.N != sy.moments.N:
        raise DimensionMismatchError(f"N differs: {sx.moments.N} vs {sy.moments.N}")
    N = sx.moments.N
    flags = (degeneracy_warnings(sx.basis.degenerate_pairs, N, "X")
             + degeneracy_warnings(sy.basis.degenerate_pairs, N, "Y"))
    return match(sx.moments, sy.moments, K=K, alpha=alpha, degeneracy_flags=flags)


def descriptors(sx, sy, params, beta=DEFAULT_BETA):
    """Descriptor fields of both shapes with Y's eigenfunctions matched to X."""
    N = params.N
    fx = descriptor_field(sx.basis, sx.basis.eigenfunctions[:, :N], sx.signature, beta)
    fy = descriptor_field(sy.basis, apply_match(sy.basis, params, N), sy.signature, beta)
    return fx, fy


def correspond(sx, sy, params, points, beta=DEFAULT_BETA):
    fx, fy = descriptors(sx, sy, params, beta)
    return match_points(points, fx, fy)
