"""Command-line pipeline: decompose -> match -> correspond, plus colored export.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .correspondence import farthest_point_sampling
from .errors import DimensionMismatchError, EigenmatchError, InputError, MeshMismatchError, NumericalError
from .export import diverging_colors, format_segments_obj
from .matching import MatchParams
from .meshio import format_ply, load_mesh
from .persist import load_shape, read_header, save_shape
from .pipeline import DEFAULTS, correspond, decompose, match_shapes

EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 4

REPORT_FORMAT = "eigenmatch-match"
REPORT_VERSION = 1

# config-file keys (flag spelling and short names) -> config field
_KEYS = {
    "num-eigs": "N", "N": "N",
    "hks-eigs": "h", "h": "h",
    "hks-samples": "Q", "Q": "Q",
    "beta": "beta",
    "candidates": "K", "K": "K",
    "out-dir": "out_dir",
    "points": "points",
}
_TYPES = {"N": int, "h": int, "Q": int, "K": int, "beta": float, "out_dir": str, "points": str}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-") if key not in _KEYS else key
        if key not in _KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        name = _KEYS[key]
        try:
            out[name] = _TYPES[name](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out


def effective_config(args):
    cfg = dict(DEFAULTS)
    cfg["out_dir"] = "."
    cfg["points"] = "fps:20"
    if args.config:
        cfg.update(read_config(args.config))
    for flag, name in (("num_eigs", "N"), ("hks_eigs", "h"), ("hks_samples", "Q"),
                       ("beta", "beta"), ("candidates", "K"), ("out_dir", "out_dir"),
                       ("points", "points")):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[name] = value
    if not 0 < cfg["N"] <= cfg["h"]:
        raise UsageError(f"need 0 < num-eigs <= hks-eigs, got {cfg['N']} and {cfg['h']}")
    if cfg["Q"] < 1:
        raise UsageError("hks-samples must be at least 1")
    if cfg["K"] < 1:
        raise UsageError("candidates must be at least 1")
    if not 0.0 <= cfg["beta"] <= 1.0:
        raise UsageError("beta must lie in [0, 1]")
    return cfg


def _config_echo(cfg, keys=("N", "h", "Q", "P", "K", "beta")):
    return {k: cfg[k] for k in keys}


def basis_path(mesh_path, out_dir):
    return Path(out_dir) / f"{Path(mesh_path).stem}.basis.npz"


def ensure_shape(mesh_path, cfg, log=None):
    """Decompose ``mesh_path`` or reuse a matching shape file in the output dir."""
    mesh = load_mesh(mesh_path)
    target = basis_path(mesh_path, cfg["out_dir"])
    want = {"N": cfg["N"], "h": cfg["h"], "Q": cfg["Q"]}
    status = "computed"
    if target.exists():
        try:
            header = read_header(target)
        except (InputError, ValueError, OSError):
            header = None
        if (header is not None and header["mesh_checksum"] == mesh.checksum
                and all(header["config"].get(k) == v for k, v in want.items())):
            status = "cached"
    if status == "cached":
        shape = load_shape(target)
    else:
        shape = decompose(mesh, N=cfg["N"], h=cfg["h"], Q=cfg["Q"])
        target.parent.mkdir(parents=True, exist_ok=True)
        save_shape(target, shape)
    if log is not None:
        log(f"{target} {status} {shape.checksum}")
    return mesh, shape, target


def cmd_decompose(args, cfg, out):
    for path in args.meshes:
        ensure_shape(path, cfg, log=out)
    return 0


def build_report(cfg, paths, shapes, result):
    sx, sy = shapes
    candidates = [{"signs": list(q.signs), "perm": list(q.perm), **c.as_dict()}
                  for q, c in result.candidates]
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "config": _config_echo(cfg),
        "inputs": {
            "X": {"path": str(paths[0]), "mesh_checksum": sx.checksum, "TH": sx.config["TH"]},
            "Y": {"path": str(paths[1]), "mesh_checksum": sy.checksum, "TH": sy.config["TH"]},
        },
        "index_base": 0,
        "signs": list(result.params.signs),
        "perm": list(result.params.perm),
        "cost": result.cost.as_dict(),
        "alpha": result.cost.alpha,
        "undetermined": list(result.undetermined),
        "iterations": result.iterations,
        "candidates": candidates,
        "warnings": list(result.degeneracy_flags),
    }


def format_report_text(report):
    c = report["cost"]
    lines = [
        "eigenmatch match report",
        "config: " + " ".join(f"{k}={v}" for k, v in sorted(report["config"].items())),
        f"X: {report['inputs']['X']['path']} ({report['inputs']['X']['mesh_checksum']})",
        f"Y: {report['inputs']['Y']['path']} ({report['inputs']['Y']['mesh_checksum']})",
        "indices are 0-based; matched i = signs[i] * phiY[perm[i]]",
        "signs: " + " ".join(f"{s:+d}" for s in report["signs"]),
        "perm:  " + " ".join(str(p) for p in report["perm"]),
        f"alpha: {report['alpha']!r}",
        f"cost:  C={c['c_mu']!r} CS={c['c_muS']!r} Cgrad={c['c_xi']!r} "
        f"CSgrad={c['c_xiS']!r} total={c['total']!r}",
        "undetermined: " + (" ".join(map(str, report["undetermined"])) or "none"),
        f"iterations: {report['iterations']}",
        "",
        "candidates (rank total C CS Cgrad CSgrad signs perm):",
    ]
    for n, cand in enumerate(report["candidates"]):
        lines.append(
            f"{n:3d} {cand['total']:.6e} {cand['c_mu']:.6e} {cand['c_muS']:.6e} "
            f"{cand['c_xi']:.6e} {cand['c_xiS']:.6e} "
            + "".join("+" if s > 0 else "-" for s in cand["signs"])
            + " " + ",".join(map(str, cand["perm"])))
    lines.append("")
    lines.append("warnings:" + ("" if report["warnings"] else " none"))
    lines.extend(f"  {w}" for w in report["warnings"])
    return "\n".join(lines) + "\n"


def cmd_match(args, cfg, out):
    shapes = [load_shape(p) for p in (args.basis_x, args.basis_y)]
    for path, s in zip((args.basis_x, args.basis_y), shapes):
        if args.num_eigs is not None and s.moments.N != cfg["N"]:
            raise DimensionMismatchError(f"{path}: stored N={s.moments.N}, requested {cfg['N']}")
    cfg = dict(cfg, N=shapes[0].moments.N, h=shapes[0].config["h"], Q=shapes[0].config["Q"])
    result = match_shapes(shapes[0], shapes[1], K=cfg["K"])
    report = build_report(cfg, (args.basis_x, args.basis_y), shapes, result)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{args.name}.json").write_text(
        json.dumps(report, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    (out_dir / f"{args.name}.txt").write_text(format_report_text(report), encoding="utf-8")
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    out(f"signs {report['signs']} perm {report['perm']} total {report['cost']['total']:.6e}")
    return 0


def read_report(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"match report {path} not found; run 'eigenmatch match' first")
    try:
        report = json.loads(p.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: not a JSON match report ({exc})") from None
    if report.get("format") != REPORT_FORMAT or report.get("version") != REPORT_VERSION:
        raise InputError(f"{path}: not an eigenmatch match report")
    return report


def parse_points(spec, mesh):
    """``fps:k`` or a file of whitespace-separated vertex indices."""
    if spec.startswith("fps:"):
        try:
            k = int(spec[4:])
        except ValueError:
            raise UsageError(f"bad point spec {spec!r}; expected fps:<count>") from None
        if not 0 < k <= mesh.n_vertices:
            raise UsageError(f"fps count must lie in [1, {mesh.n_vertices}]")
        return farthest_point_sampling(mesh, k)
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"points file {spec} not found")
    tokens = []
    for line in path.read_text(encoding="utf-8").splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    try:
        pts = [int(t) for t in tokens]
    except ValueError as exc:
        raise InputError(f"{spec}: {exc}") from None
    if not pts:
        raise InputError(f"{spec}: no vertex indices")
    bad = [p for p in pts if not 0 <= p < mesh.n_vertices]
    if bad:
        raise InputError(f"{spec}: vertex index {bad[0]} out of range [0, {mesh.n_vertices})")
    return pts


def format_table(cfg, rows, params):
    lines = [
        "# eigenmatch correspondence",
        "# config: " + " ".join(f"{k}={v}" for k, v in sorted(_config_echo(cfg).items())),
        "# signs: " + " ".join(f"{s:+d}" for s in params.signs),
        "# perm: " + " ".join(map(str, params.perm)),
        "# src dst distance",
    ]
    lines.extend(f"{s} {d} {dist!r}" for s, d, dist in rows)
    return "\n".join(lines) + "\n"


def cmd_correspond(args, cfg, out):
    report = read_report(args.report)
    rcfg = report["config"]
    cfg = dict(cfg, N=rcfg["N"], h=rcfg["h"], Q=rcfg["Q"])
    mx, sx, _ = ensure_shape(args.mesh_x, cfg)
    my, sy, _ = ensure_shape(args.mesh_y, cfg)
    for key, s in (("X", sx), ("Y", sy)):
        if s.checksum != report["inputs"][key]["mesh_checksum"]:
            raise MeshMismatchError(f"mesh {key} does not match the mesh recorded in {args.report}")
    params = MatchParams(report["signs"], report["perm"])
    points = parse_points(cfg["points"], mx)
    rows = correspond(sx, sy, params, points, beta=cfg["beta"])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / f"{args.name}.txt"
    table.write_text(format_table(cfg, rows, params), encoding="utf-8")
    if args.segments:
        Path(args.segments).write_text(format_segments_obj(mx, my, rows), encoding="utf-8")
    out(f"{table} {len(rows)} points")
    return 0


def cmd_export_colored(args, cfg, out):
    mesh = load_mesh(args.mesh)
    if args.field_file:
        try:
            field = np.loadtxt(args.field_file, dtype=np.float64, ndmin=1)
        except (OSError, ValueError) as exc:
            raise InputError(f"{args.field_file}: {exc}") from None
        label = f"file {Path(args.field_file).name}"
    else:
        _, shape, _ = ensure_shape(args.mesh, cfg)
        if not 0 <= args.field < shape.basis.h:
            raise UsageError(f"field index must lie in [0, {shape.basis.h})")
        field = shape.basis.eigenfunctions[:, args.field]
        label = f"eigenfunction {args.field}"
    if field.ndim != 1 or field.shape[0] != mesh.n_vertices:
        raise DimensionMismatchError(
            f"field has {field.size} values, mesh has {mesh.n_vertices} vertices")
    text = format_ply(mesh, colors=diverging_colors(field))
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    Path(args.output).write_text(text, encoding="utf-8")
    out(f"{args.output} {label}")
    return 0


def _add_common(p):
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--num-eigs", type=int, help="eigenfunctions to match, N (default 10)")
    p.add_argument("--hks-eigs", type=int, help="eigenpairs in the HKS sum, h (default 30)")
    p.add_argument("--hks-samples", type=int, help="HKS-derivative time samples, Q (default 6)")
    p.add_argument("--beta", type=float, help="spectral weight in the point descriptor (default 0.5)")
    p.add_argument("--candidates", type=int, help="sign sequences kept for the final ranking (default 32)")
    p.add_argument("--out-dir", help="output directory (default .)")


def build_parser():
    parser = _Parser(prog="eigenmatch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="eigenbasis, signature and moments of meshes")
    p.add_argument("meshes", nargs="+", help="OFF or ascii PLY files")
    _add_common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("match", help="match the eigenfunctions of two shape files")
    p.add_argument("basis_x", help="shape file of X")
    p.add_argument("basis_y", help="shape file of Y")
    p.add_argument("--name", default="match", help="report file stem (default match)")
    _add_common(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("correspond", help="feature-point correspondence from a match report")
    p.add_argument("mesh_x")
    p.add_argument("mesh_y")
    p.add_argument("--report", required=True, help="match.json written by 'match'")
    p.add_argument("--points", help="vertex index file or fps:<count> (default fps:20)")
    p.add_argument("--segments", help="also write an OBJ with matched points joined")
    p.add_argument("--name", default="correspondence", help="table file stem")
    _add_common(p)
    p.set_defaults(func=cmd_correspond)

    p = sub.add_parser("export-colored", help="ascii PLY with a field as red-blue vertex colors")
    p.add_argument("mesh")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--field", type=int, help="eigenfunction index (0-based)")
    group.add_argument("--field-file", help="text file with one value per vertex")
    p.add_argument("--palette", choices=["red-blue"], default="red-blue")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_export_colored)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        return args.func(args, cfg, print)
    except UsageError as exc:
        print(f"eigenmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"eigenmatch: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"eigenmatch: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"eigenmatch: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EigenmatchError, ValueError) as exc:
        print(f"eigenmatch: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
