"""Built-in scenes for the recurring examples (lattices of discs, slits, points)."""
from __future__ import annotations

import re

from .geometry import Disc, Lattice, Point, Scene, SceneError, Segment

ARCTAN_ESCAPE = (-5.0, -20.0, -80.0, -320.0)


def unit_disc() -> Scene:
    return Scene("bounded", (), Disc(0j, 1.0), name="unit_disc")


def disc_complement(radius: float = 1.0) -> Scene:
    return Scene("complement", (Disc(0j, float(radius)),), name="disc_complement")


def plane() -> Scene:
    return Scene("complement", (), name="plane")


def _square_lattice(spacing, element, sequence=None) -> Lattice:
    return Lattice(0j, (complex(spacing, 0), complex(0, spacing)), tuple(element), sequence)


def lattice_discs(eps: float = 0.1, spacing: float = 1.0) -> Scene:
    return Scene(lattice=_square_lattice(spacing, [Disc(0j, float(eps))]), name="lattice_discs")


def lattice_segments(length: float = 0.5, spacing: float = 1.0) -> Scene:
    half = float(length) / 2
    return Scene(lattice=_square_lattice(spacing, [Segment(complex(-half, 0), complex(half, 0))]),
                 name="lattice_segments")


def arctan_lattice() -> Scene:
    """Horizontal slits of length arctan(j)/pi + 1/2 centred at j + i*l."""
    lat = _square_lattice(1.0, [Segment(-0.5 + 0j, 0.5 + 0j)], "arctan")
    return Scene(lattice=lat, escape_centers=tuple(complex(m, 0) for m in ARCTAN_ESCAPE),
                 name="arctan_lattice")


def integer_lattice_points() -> Scene:
    return Scene(lattice=_square_lattice(1.0, [Point(0j)]), name="integer_lattice_points")


BUILTINS = {
    "unit_disc": (unit_disc, ()),
    "disc_complement": (disc_complement, ("radius",)),
    "plane": (plane, ()),
    "lattice_discs": (lattice_discs, ("eps", "spacing")),
    "lattice_segments": (lattice_segments, ("length", "spacing")),
    "arctan_lattice": (arctan_lattice, ()),
    "integer_lattice_points": (integer_lattice_points, ()),
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def builtin_scene(name, **params) -> Scene:
    if name not in BUILTINS:
        raise SceneError(f"unknown named scene {name!r}; choose from {sorted(BUILTINS)}", "named.name")
    fn, allowed = BUILTINS[name]
    bad = set(params) - set(allowed)
    if bad:
        raise SceneError(f"{name} takes no parameter(s) {sorted(bad)}", "named")
    return fn(**params)


def parse_builtin(spec: str) -> Scene | None:
    """``lattice_discs(0.1, 1)`` style spec -> Scene, or None if not a builtin name."""
    m = _CALL.match(spec)
    if not m or m.group(1) not in BUILTINS:
        return None
    name, argstr = m.group(1), m.group(2)
    _, names = BUILTINS[name]
    args = [a.strip() for a in argstr.split(",")] if argstr and argstr.strip() else []
    if len(args) > len(names):
        raise SceneError(f"{name} takes at most {len(names)} arguments", "named")
    params = {}
    for k, a in zip(names, args):
        try:
            params[k] = float(a)
        except ValueError:
            raise SceneError(f"argument {a!r} is not a number", f"named.{k}") from None
    return builtin_scene(name, **params)
