"""On-disk container for a decomposed shape.

A shape file is an uncompressed ``.npz`` archive (readable with
``numpy.load``) with these members, all little-endian:

==================  ============  =========================================
member              dtype/shape   content
==================  ============  =========================================
header              uint8 (n,)    UTF-8 JSON, see below
eigenvalues         f8 (h,)       ascending eigenvalues
eigenfunctions      f8 (V, h)     vertex-major, mass-orthonormal columns
mass                f8 (V,)       lumped mass diagonal
signature           f8 (V, Q)     normalized HKS-derivative channels
signature_times     f8 (Q,)       sample times of the channels
mu                  f8 (N,N,N)    third-order moments
xi                  f8 (N,N,N,P)  gradient-normal moments
muS                 f8 (N, Q)     signature joint moments
xiS                 f8 (N,Q,N,P)  signature gradient moments
alpha               f8 ()         balance weight of this shape
==================  ============  =========================================

The header holds ``format`` (``"eigenmatch-shape"``), ``version`` (1),
``mesh_checksum`` (SHA-256 of the mesh arrays), ``n_vertices``,
``degenerate_pairs`` and ``config`` with ``N``, ``h``, ``Q``, ``P``, ``TH``.
Zip entries carry a fixed timestamp so identical inputs give identical bytes.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .moments import MomentSet
from .spectral import SignatureField, SpectralBasis

FORMAT = "eigenmatch-shape"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass(eq=False)
class ShapeData:
    basis: SpectralBasis
    signature: SignatureField
    moments: MomentSet
    checksum: str
    config: dict


def write_npz(path, arrays):
    """Write arrays to an ``.npz`` with deterministic bytes."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arr), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            info.external_attr = 0o644 << 16
            zf.writestr(info, buf.getvalue())


def save_shape(path, shape):
    b, s, m = shape.basis, shape.signature, shape.moments
    header = {
        "format": FORMAT,
        "version": VERSION,
        "mesh_checksum": shape.checksum,
        "n_vertices": int(b.n_vertices),
        "degenerate_pairs": [list(p) for p in b.degenerate_pairs],
        "config": shape.config,
    }
    text = json.dumps(header, sort_keys=True).encode("utf-8")
    write_npz(path, {
        "header": np.frombuffer(text, dtype=np.uint8),
        "eigenvalues": b.eigenvalues.astype("<f8"),
        "eigenfunctions": np.ascontiguousarray(b.eigenfunctions, dtype="<f8"),
        "mass": b.mass.astype("<f8"),
        "signature": np.ascontiguousarray(s.values, dtype="<f8"),
        "signature_times": s.times.astype("<f8"),
        "mu": m.mu.astype("<f8"),
        "xi": m.xi.astype("<f8"),
        "muS": m.muS.astype("<f8"),
        "xiS": m.xiS.astype("<f8"),
        "alpha": np.array(m.alpha, dtype="<f8"),
    })


def read_header(path):
    with np.load(path, allow_pickle=False) as z:
        return _header(z, path)


def _header(z, path):
    if "header" not in z.files:
        raise InputError(f"{path}: not an eigenmatch shape file")
    header = json.loads(bytes(z["header"]).decode("utf-8"))
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise InputError(f"{path}: unsupported shape file format {header.get('format')!r} "
                         f"version {header.get('version')!r}")
    return header


def load_shape(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such shape file")
    try:
        with np.load(path, allow_pickle=False) as z:
            header = _header(z, path)
            a = {k: z[k] for k in z.files if k != "header"}
    except (zipfile.BadZipFile, ValueError, KeyError) as exc:
        raise InputError(f"{path}: unreadable shape file ({exc})") from None
    basis = SpectralBasis(a["eigenvalues"], a["eigenfunctions"], a["mass"],
                          tuple(tuple(p) for p in header["degenerate_pairs"]))
    sig = SignatureField(a["signature"], a["signature_times"])
    cfg = header["config"]
    moments = MomentSet(a["mu"], a["xi"], a["muS"], a["xiS"], float(a["alpha"]), float(cfg["TH"]))
    return ShapeData(basis, sig, moments, header["mesh_checksum"], cfg)
