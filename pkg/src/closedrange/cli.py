"""Command-line interface: ``closedrange {cap,lambda1,classify,bergman,sweep}``.

Exit codes: 0 success, 2 invalid input (bad scene, missing file, unknown
preset), 3 numeric failure.  Results go to stdout or ``--out``; with
``--out`` a sidecar ``<out>.meta.json`` records version, config hash and
wall time.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .classify import SCHEMA_VERSION, BergmanParams, MainParams, classify_bergman, classify_main
from .geometry import (CompactSet, Disc, GridTooLargeError, Polygon, Scene, SceneError, Segment,
                       clip_complement, parse_scene)
from .inradius import UnsupportedSceneError
from .logcap import ConvergenceError, capacity
from .scenes import arctan_lattice, parse_builtin, unit_disc
from .spectral import (EmptyDomainError, ReducedOrderWarning, SpectralConvergenceError,
                       closed_range_constant, lambda1_richardson)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
PRESETS = ("slit_shrink", "arctan_ladder", "capacity_convergence")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    scene: str | None = None
    params: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "json"
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        for k, v in self.params.items():
            if k.endswith("tol") and not (isinstance(v, (int, float)) and v > 0):
                raise InputError(f"tolerance {k} must be > 0")

    def digest(self) -> str:
        # output path and thread count do not influence results
        payload = {"command": self.command, "scene": self.scene, "params": self.params,
                   "format": self.fmt, "seed": self.seed}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text: str, n: int | None = None) -> list:
    try:
        vals = [float(Fraction(t.strip())) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _point(text):
    x, y = _floats(text, 2)
    return complex(x, y)


def _box(text):
    return tuple(_floats(text, 4))


def load_scene(spec: str) -> Scene:
    """A scene from a JSON file path or a built-in spec such as ``lattice_discs(0.1,1)``."""
    p = Path(spec)
    if p.is_file():
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as e:
            raise InputError(f"cannot read scene file {spec}: {e}") from None
        return parse_scene(text)
    scene = parse_builtin(spec)
    if scene is None:
        raise InputError(f"scene file not found and not a built-in scene: {spec}")
    return scene


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def flatten(obj, prefix="") -> list:
    """Dotted-path (key, value) rows for every leaf of a JSON-like tree."""
    rows = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            rows += flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            rows += flatten(v, f"{prefix}[{i}]")
    else:
        rows.append((prefix, obj))
    return rows


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_cap(args, cfg: RunConfig) -> str:
    scene = load_scene(args.scene)
    K = clip_complement(scene, args.center, args.radius)
    rep = capacity(K, args.budget)
    out = {"schema_version": SCHEMA_VERSION, "center": args.center, "radius": args.radius,
           "pieces": len(K.pieces), **rep.to_dict()}
    return dumps(out)


def _default_box(scene: Scene, hs) -> tuple:
    if scene.mode != "bounded":
        raise InputError("--box is required for unbounded scenes")
    c, r = scene.base_disc.center, scene.base_disc.radius
    pad = max(hs)
    return (c.real - r - pad, c.real + r + pad, c.imag - r - pad, c.imag + r + pad)


def cmd_lambda1(args, cfg: RunConfig) -> str:
    scene = load_scene(args.scene)
    hs = tuple(args.h)
    if len(hs) != 2:
        raise InputError("--h takes exactly two spacings (coarse,fine)")
    box = tuple(args.box) if args.box else _default_box(scene, hs)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ReducedOrderWarning)
        res = lambda1_richardson(scene, box, hs, args.tol)
    est = closed_range_constant(res)
    out = {"schema_version": SCHEMA_VERSION, **res.to_dict(), "box": list(box),
           "constant": est.constant, "n_interior": res.grid.n_interior,
           "warnings": sorted({str(w.message) for w in caught})}
    if args.emit_eigvector:
        g = res.grid
        z = g.coords()[g.interior_mask]
        v = res.eigvector[g.interior_mask]
        _write(args.emit_eigvector, _csv(["x", "y", "value"], zip(z.real, z.imag, v)))
    return dumps(out)


def cmd_classify(args, cfg: RunConfig) -> str:
    scene = load_scene(args.scene)
    rep = classify_main(scene, MainParams(threads=args.threads)).to_dict()
    return dumps(rep) if args.format == "json" else _csv(["key", "value"], flatten(rep))


def cmd_bergman(args, cfg: RunConfig) -> str:
    scene = load_scene(args.scene)
    rep = classify_bergman(scene, BergmanParams()).to_dict()
    return dumps(rep) if args.format == "json" else _csv(["key", "value"], flatten(rep))


def _sweep_slit_shrink(args):
    base = unit_disc()
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedOrderWarning)
        for L in (0.5, 0.1, 0.02):
            seg = Segment(complex(-L / 2, 0), complex(L / 2, 0))
            cap = capacity(CompactSet.from_pieces([seg]), args.budget).estimate
            pad = 1 / 32
            res = lambda1_richardson(base.with_obstacles([seg]), (-1 - pad, 1 + pad, -1 - pad, 1 + pad),
                                     (1 / 32, 1 / 64))
            rows.append((L, cap, res.best))
    return _csv(["slit_len", "cap", "lambda1"], rows)


def _sweep_arctan_ladder(args):
    scene = arctan_lattice()
    rows = []
    h = 1 / 64
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedOrderWarning)
        for m in (5, 20, 80, 320):
            c = complex(-m, 0)
            cap = capacity(clip_complement(scene, c, 2.0), args.budget).estimate
            pad = 2.0 + 2 * h
            res = lambda1_richardson(scene.restricted_to_disc(c, 2.0),
                                     (c.real - pad, c.real + pad, -pad, pad), (2 * h, h))
            rows.append((m, cap, res.best))
    return _csv(["m", "cap_clip", "lambda1_truncation"], rows)


def _sweep_capacity_convergence(args):
    shapes = {"disc": (CompactSet.from_pieces([Disc(0j, 1.0)]), 1.0),
              "segment": (CompactSet.from_pieces([Segment(-2 + 0j, 2 + 0j)]), 1.0),
              "square": (CompactSet.from_pieces([Polygon((0j, 1 + 0j, 1 + 1j, 1j))]), float("nan"))}
    rows = []
    for name, (K, exact) in shapes.items():
        for n in (8, 16, 32, 64, 128):
            r = capacity(K, n)
            rows.append((name, n, r.estimate, r.lower, r.upper, exact))
    return _csv(["shape", "n", "estimate", "lower", "upper", "exact"], rows)


SWEEPS = {"slit_shrink": _sweep_slit_shrink, "arctan_ladder": _sweep_arctan_ladder,
          "capacity_convergence": _sweep_capacity_convergence}


def cmd_sweep(args, cfg: RunConfig) -> str:
    if args.preset not in SWEEPS:
        raise InputError(f"unknown preset {args.preset!r}; choose from {sorted(SWEEPS)}")
    return SWEEPS[args.preset](args)


# ---------------------------------------------------------------------------
# plumbing


def _write(path: str, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="closedrange", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--seed", type=int, default=0, help="recorded in the config; all pipelines are deterministic")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cap", parents=[common], help="capacity of the complement clipped to a disc")
    p.add_argument("--scene", required=True, help="scene JSON file or built-in spec")
    p.add_argument("--center", type=_point, default=0j, help="x,y (default 0,0)")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--budget", type=int, default=64)

    p = sub.add_parser("lambda1", parents=[common], help="first Dirichlet eigenvalue with Richardson extrapolation")
    p.add_argument("--scene", required=True)
    p.add_argument("--box", type=_box, help="xmin,xmax,ymin,ymax (default: base disc bounding box)")
    p.add_argument("--h", type=_floats, default=[1 / 32, 1 / 64], help="coarse,fine spacings (fractions allowed)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--emit-eigvector", metavar="CSV", help="write x,y,value of the fine-grid eigenvector")

    for name, text in (("classify", "main-theorem verdict"), ("bergman", "Bergman-space dimension verdict")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--scene", required=True)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep presets (CSV)")
    p.add_argument("--preset", required=True, help=f"one of {', '.join(PRESETS)}")
    p.add_argument("--budget", type=int, default=64)
    return ap


COMMANDS = {"cap": cmd_cap, "lambda1": cmd_lambda1, "classify": cmd_classify,
            "bergman": cmd_bergman, "sweep": cmd_sweep}


def _config(args) -> RunConfig:
    skip = {"command", "out", "threads", "seed", "format", "scene"}
    params = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        params[k] = [v.real, v.imag] if isinstance(v, complex) else (list(v) if isinstance(v, tuple) else v)
    return RunConfig(args.command, getattr(args, "scene", None), params, args.out,
                     getattr(args, "format", "json"), args.seed, args.threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _config(args)
        if args.threads is not None and args.threads < 1:
            raise InputError("--threads must be >= 1")
        text = COMMANDS[args.command](args, cfg)
    except (InputError, SceneError, UnsupportedSceneError, FileNotFoundError, GridTooLargeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (EmptyDomainError, SpectralConvergenceError, ConvergenceError, np.linalg.LinAlgError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        _write(args.out, text)
        meta = {"version": __version__, "config_hash": cfg.digest(), "config": asdict(cfg),
                "wall_time_s": round(time.perf_counter() - t0, 3)}
        _write(args.out + ".meta.json", dumps(meta))
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
