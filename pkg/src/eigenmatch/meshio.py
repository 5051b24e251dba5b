"""Reading and writing OFF and ASCII PLY triangle meshes."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DegenerateMeshError, ParseError
from .mesh_core import TriMesh

FORMATS = ("off", "ply")


def _content_lines(text):
    """Yield (lineno, tokens) for non-blank, non-comment lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _floats(tokens, lineno, path, count=3):
    if len(tokens) < count:
        raise ParseError(f"expected {count} coordinates, got {len(tokens)}", lineno, path)
    try:
        return [float(t) for t in tokens[:count]]
    except ValueError as exc:
        raise ParseError(f"bad float: {exc}", lineno, path) from None


def _ints(tokens, lineno, path):
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"bad integer: {exc}", lineno, path) from None


def _check_face(idx, nv, lineno, path, face_no):
    for i in idx:
        if i < 0 or i >= nv:
            raise ParseError(f"face {face_no}: vertex index {i} out of range [0, {nv})", lineno, path)


def parse_off(text, path=None):
    lines = _content_lines(text)
    try:
        lineno, tok = next(lines)
    except StopIteration:
        raise ParseError("empty file", None, path) from None
    if tok[0] != "OFF":
        raise ParseError(f"expected 'OFF' header, got {tok[0]!r}", lineno, path)
    counts = tok[1:]
    if not counts:
        try:
            lineno, counts = next(lines)
        except StopIteration:
            raise ParseError("missing counts line", lineno, path) from None
    counts = _ints(counts, lineno, path)
    if len(counts) < 2 or counts[0] < 0 or counts[1] < 0:
        raise ParseError("counts line must be 'V F E'", lineno, path)
    nv, nf = counts[0], counts[1]

    verts = np.empty((nv, 3))
    for n in range(nv):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError(f"file ends after {n} of {nv} vertices", lineno, path) from None
        verts[n] = _floats(tok, lineno, path)

    faces = np.empty((nf, 3), dtype=np.int64)
    face_lines = []
    for n in range(nf):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise ParseError(f"file ends after {n} of {nf} faces", lineno, path) from None
        vals = _ints(tok, lineno, path)
        if vals[0] != 3 or len(vals) < 4:
            raise ParseError(f"face {n}: only triangles are supported", lineno, path)
        _check_face(vals[1:4], nv, lineno, path, n)
        faces[n] = vals[1:4]
        face_lines.append(lineno)
    return _build(verts, faces, face_lines, path)


_PLY_TYPES = {
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double",
    "int8", "uint8", "int16", "uint16", "int32", "uint32", "float32", "float64",
}


def parse_ply(text, path=None):
    raw = text.splitlines()
    if not raw or raw[0].strip() != "ply":
        raise ParseError("expected 'ply' magic", 1, path)
    elements = []  # [name, count, [(prop_name, is_list)]]
    lineno = 1
    header_end = None
    for lineno in range(2, len(raw) + 1):
        tok = raw[lineno - 1].split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        key = tok[0]
        if key == "format":
            if len(tok) < 2 or tok[1] != "ascii":
                raise ParseError(f"unsupported PLY format {' '.join(tok[1:])!r}; only ascii", lineno, path)
        elif key == "element":
            if len(tok) != 3:
                raise ParseError("malformed element line", lineno, path)
            elements.append([tok[1], _ints([tok[2]], lineno, path)[0], []])
        elif key == "property":
            if not elements:
                raise ParseError("property before element", lineno, path)
            if tok[1] == "list":
                if len(tok) != 5 or tok[2] not in _PLY_TYPES or tok[3] not in _PLY_TYPES:
                    raise ParseError("malformed list property", lineno, path)
                elements[-1][2].append((tok[4], True))
            else:
                if len(tok) != 3 or tok[1] not in _PLY_TYPES:
                    raise ParseError("malformed property", lineno, path)
                elements[-1][2].append((tok[2], False))
        elif key == "end_header":
            header_end = lineno
            break
        else:
            raise ParseError(f"unexpected header keyword {key!r}", lineno, path)
    if header_end is None:
        raise ParseError("missing end_header", lineno, path)

    body = ((n, r.split()) for n, r in enumerate(raw[header_end:], start=header_end + 1) if r.strip())
    verts = faces = None
    face_lines = []
    for name, count, props in elements:
        if name == "vertex":
            names = [p for p, _ in props]
            try:
                cols = [names.index(c) for c in ("x", "y", "z")]
            except ValueError:
                raise ParseError("vertex element lacks x, y, z properties", header_end, path) from None
            if any(is_list for _, is_list in props):
                raise ParseError("list properties on vertices are not supported", header_end, path)
            verts = np.empty((count, 3))
            for n in range(count):
                try:
                    lineno, tok = next(body)
                except StopIteration:
                    raise ParseError(f"file ends after {n} of {count} vertices", lineno, path) from None
                if len(tok) < len(props):
                    raise ParseError("too few vertex properties", lineno, path)
                verts[n] = _floats([tok[c] for c in cols], lineno, path)
        elif name == "face":
            if verts is None:
                raise ParseError("face element must follow vertex element", header_end, path)
            if not props or not props[0][1] or props[0][0] not in ("vertex_indices", "vertex_index"):
                raise ParseError("face element needs a vertex_indices list property first", header_end, path)
            faces = np.empty((count, 3), dtype=np.int64)
            for n in range(count):
                try:
                    lineno, tok = next(body)
                except StopIteration:
                    raise ParseError(f"file ends after {n} of {count} faces", lineno, path) from None
                vals = _ints(tok, lineno, path)
                if vals[0] != 3 or len(vals) < 4:
                    raise ParseError(f"face {n}: only triangles are supported", lineno, path)
                _check_face(vals[1:4], verts.shape[0], lineno, path, n)
                faces[n] = vals[1:4]
                face_lines.append(lineno)
        else:
            for n in range(count):
                try:
                    next(body)
                except StopIteration:
                    raise ParseError(f"file ends inside element {name!r}", lineno, path) from None
    if verts is None or faces is None:
        raise ParseError("PLY file needs vertex and face elements", header_end, path)
    return _build(verts, faces, face_lines, path)


def _build(verts, faces, face_lines, path):
    try:
        return TriMesh(verts, faces)
    except DegenerateMeshError as exc:
        if exc.face is not None and exc.face < len(face_lines):
            exc.line = face_lines[exc.face]
            exc.args = (f"{path}:line {exc.line}: {exc.args[0]}",)
        raise


def load_mesh(path, format=None):
    """Load an OFF or ASCII PLY triangle mesh.

    ``format`` defaults to the file extension.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise ParseError(f"unknown mesh format {fmt!r}; expected one of {FORMATS}", None, path)
    try:
        text = path.read_text(encoding="ascii")
    except UnicodeDecodeError:
        raise ParseError("file is not ASCII (binary PLY is not supported)", None, path) from None
    return parse_off(text, path) if fmt == "off" else parse_ply(text, path)


def format_off(mesh):
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    out += [f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    out += [f"3 {i} {j} {k}" for i, j, k in mesh.faces.tolist()]
    return "\n".join(out) + "\n"


def format_ply(mesh, colors=None):
    head = ["ply", "format ascii 1.0", f"element vertex {mesh.n_vertices}",
            "property double x", "property double y", "property double z"]
    if colors is not None:
        colors = np.asarray(colors)
        if colors.shape != (mesh.n_vertices, 3):
            raise ValueError("colors must have shape (V, 3)")
        head += ["property uchar red", "property uchar green", "property uchar blue"]
    head += [f"element face {mesh.n_faces}", "property list uchar int vertex_indices", "end_header"]
    body = []
    for n, (x, y, z) in enumerate(mesh.vertices.tolist()):
        line = f"{x!r} {y!r} {z!r}"
        if colors is not None:
            r, g, b = (int(c) for c in colors[n])
            line += f" {r} {g} {b}"
        body.append(line)
    body += [f"3 {i} {j} {k}" for i, j, k in mesh.faces.tolist()]
    return "\n".join(head + body) + "\n"


def save_mesh(path, mesh, colors=None):
    path = Path(path)
    if path.suffix.lower() == ".off":
        if colors is not None:
            raise ValueError("colors are only written to PLY")
        path.write_text(format_off(mesh))
    else:
        path.write_text(format_ply(mesh, colors))
