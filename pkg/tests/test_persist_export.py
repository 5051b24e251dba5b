import numpy as np
import pytest

from eigenmatch.errors import InputError
from eigenmatch.export import NEUTRAL, diverging_colors, format_segments_obj
from eigenmatch.persist import load_shape, read_header, save_shape
from eigenmatch.spectral import compute_basis
from eigenmatch.synthetic import icosphere


def test_round_trip(tmp_path, blob_shape):
    p = tmp_path / "s.npz"
    save_shape(p, blob_shape)
    back = load_shape(p)
    assert back.checksum == blob_shape.checksum
    assert back.config == blob_shape.config
    assert back.basis.degenerate_pairs == blob_shape.basis.degenerate_pairs
    for a, b in ((back.basis.eigenvalues, blob_shape.basis.eigenvalues),
                 (back.basis.eigenfunctions, blob_shape.basis.eigenfunctions),
                 (back.basis.mass, blob_shape.basis.mass),
                 (back.signature.values, blob_shape.signature.values),
                 (back.signature.times, blob_shape.signature.times),
                 (back.moments.mu, blob_shape.moments.mu), (back.moments.xi, blob_shape.moments.xi),
                 (back.moments.muS, blob_shape.moments.muS), (back.moments.xiS, blob_shape.moments.xiS)):
        assert np.array_equal(a, b)
    assert back.moments.alpha == blob_shape.moments.alpha
    h = read_header(p)
    assert h["format"] == "eigenmatch-shape" and h["version"] == 1
    assert h["config"]["N"] == 10 and h["config"]["h"] == 30 and h["config"]["P"] == 2
    assert h["n_vertices"] == blob_shape.basis.n_vertices


def test_bytes_are_deterministic(tmp_path, blob_shape):
    a, b = tmp_path / "a.npz", tmp_path / "b.npz"
    save_shape(a, blob_shape)
    save_shape(b, blob_shape)
    assert a.read_bytes() == b.read_bytes()
    # plain numpy can read the container
    with np.load(a) as z:
        assert z["eigenfunctions"].shape == (blob_shape.basis.n_vertices, 30)


def test_bad_files(tmp_path):
    with pytest.raises(InputError):
        load_shape(tmp_path / "missing.npz")
    junk = tmp_path / "junk.npz"
    junk.write_bytes(b"not a zip")
    with pytest.raises(InputError):
        load_shape(junk)
    other = tmp_path / "other.npz"
    np.savez(other, a=np.zeros(3))
    with pytest.raises(InputError):
        load_shape(other)


def test_constant_field_is_neutral():
    assert np.all(diverging_colors(np.full(5, 2.5)) == NEUTRAL)
    assert np.all(diverging_colors(np.zeros(4)) == NEUTRAL)


def test_palette_mirror_under_negation():
    f = np.random.default_rng(0).normal(size=50)
    c, n = diverging_colors(f), diverging_colors(-f)
    assert np.array_equal(c[:, 0], n[:, 2]) and np.array_equal(c[:, 2], n[:, 0])
    assert np.array_equal(c[:, 1], n[:, 1])


def test_sign_mapping_and_monotonicity():
    sphere = icosphere(2)
    f = compute_basis(sphere, 4).eigenfunctions[:, 1]
    c = diverging_colors(f).astype(int)
    pos, neg = f > 0, f < 0
    assert np.all(c[pos, 0] == 255) and np.all(c[neg, 2] == 255)
    # fading toward white is monotone in |f|
    order = np.argsort(f[pos])
    assert np.all(np.diff(c[pos][order, 1]) <= 0)
    order = np.argsort(-f[neg])
    assert np.all(np.diff(c[neg][order, 1]) <= 0)
    assert c[np.argmax(f)].tolist() == [255, 0, 0]
    assert c[np.argmin(f)].tolist() == [0, 0, 255]


def test_segments_obj(blob_shape):
    sphere = icosphere(1)
    text = format_segments_obj(sphere, sphere, [(0, 1, 0.5), (2, 3, 0.1)])
    lines = text.splitlines()
    assert sum(line.startswith("v ") for line in lines) == 4
    assert lines[-2:] == ["l 1 2", "l 3 4"]
