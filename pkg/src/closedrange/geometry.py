"""Planar scenes: obstacle primitives, open sets built from them, and grids.

Points in the plane are Python/NumPy complex numbers throughout.  A scene
describes an open set ``Omega`` either as the plane minus a union of closed
obstacles, or as an open base disc minus obstacles.  Obstacles may be listed
explicitly or replicated over a two-dimensional lattice.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, Union

import numpy as np

# relative tolerance for "lies on" predicates (segments, points, polygon edges)
ON_TOL = 1e-12
DEFAULT_NODE_BUDGET = 4_000_000


class SceneError(ValueError):
    """Invalid scene description; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SceneSyntaxError(SceneError):
    pass


class GridTooLargeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# primitives


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float
    # angular offset of boundary nodes; rotates with the disc so that
    # discretizations are equivariant under rigid motions
    phase: float = 0.0

    kind = "disc"

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise SceneError(f"disc radius must be > 0, got {self.radius}", "radius")


@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex

    kind = "segment"

    def __post_init__(self):
        if self.a == self.b:
            raise SceneError("segment endpoints coincide", "b")

    @property
    def length(self) -> float:
        return abs(self.b - self.a)


@dataclass(frozen=True)
class Polygon:
    vertices: tuple

    kind = "polygon"

    def __post_init__(self):
        v = self.vertices
        if len(v) < 3:
            raise SceneError("polygon needs at least 3 vertices", "vertices")
        if abs(polygon_area(v)) <= 0:
            raise SceneError("polygon has zero area", "vertices")
        if not _is_simple(v):
            raise SceneError("polygon is not simple", "vertices")


@dataclass(frozen=True)
class Point:
    p: complex

    kind = "point"


Obstacle = Union[Disc, Segment, Polygon, Point]


def polygon_area(vertices: Sequence[complex]) -> float:
    z = np.asarray(vertices, dtype=complex)
    zn = np.roll(z, -1)
    return 0.5 * float(np.sum(z.real * zn.imag - zn.real * z.imag))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b - a).real * (c - a).imag - (b - a).imag * (c - a).real

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 != 0 and d3 * d4 != 0:
        return True
    # collinear overlaps
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and min(a.real, b.real) <= c.real <= max(a.real, b.real) and \
                min(a.imag, b.imag) <= c.imag <= max(a.imag, b.imag):
            return True
    return False


def _is_simple(vertices) -> bool:
    v = list(vertices)
    n = len(v)
    if len(set(v)) != n:
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                return False
    return True


# ---------------------------------------------------------------------------
# vectorized predicates


def segment_distance(z, a: complex, b: complex) -> np.ndarray:
    """Euclidean distance from each point of ``z`` to the closed segment [a, b]."""
    z = np.asarray(z, dtype=complex)
    d = b - a
    t = ((z - a) * np.conj(d)).real / (abs(d) ** 2)
    t = np.clip(t, 0.0, 1.0)
    return np.abs(z - (a + t * d))


def polygon_contains(z, vertices: Sequence[complex], closed: bool = True) -> np.ndarray:
    """Even-odd point-in-polygon; boundary points count as inside when ``closed``."""
    z = np.asarray(z, dtype=complex)
    v = np.asarray(vertices, dtype=complex)
    x, y = z.real, z.imag
    inside = np.zeros(z.shape, dtype=bool)
    n = len(v)
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        cond = (a.imag > y) != (b.imag > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a.real + (y - a.imag) * (b.real - a.real) / (b.imag - a.imag)
        inside ^= cond & (x < xc)
    if closed:
        scale = 1.0 + np.max(np.abs(v))
        for i in range(n):
            inside |= segment_distance(z, v[i], v[(i + 1) % n]) <= ON_TOL * scale
    return inside


def obstacle_contains(ob: Obstacle, z) -> np.ndarray:
    """Membership in the closed obstacle."""
    z = np.asarray(z, dtype=complex)
    if isinstance(ob, Disc):
        return np.abs(z - ob.center) <= ob.radius
    if isinstance(ob, Segment):
        scale = 1.0 + max(abs(ob.a), abs(ob.b))
        return segment_distance(z, ob.a, ob.b) <= ON_TOL * scale
    if isinstance(ob, Polygon):
        return polygon_contains(z, ob.vertices)
    if isinstance(ob, Point):
        return np.abs(z - ob.p) <= ON_TOL * (1.0 + abs(ob.p))
    raise TypeError(ob)


def obstacle_distance(ob: Obstacle, z) -> np.ndarray:
    """Distance to the closed obstacle (zero inside)."""
    z = np.asarray(z, dtype=complex)
    if isinstance(ob, Disc):
        return np.maximum(np.abs(z - ob.center) - ob.radius, 0.0)
    if isinstance(ob, Segment):
        return segment_distance(z, ob.a, ob.b)
    if isinstance(ob, Polygon):
        v = ob.vertices
        d = np.min([segment_distance(z, v[i], v[(i + 1) % len(v)]) for i in range(len(v))], axis=0)
        return np.where(polygon_contains(z, v), 0.0, d)
    if isinstance(ob, Point):
        return np.abs(z - ob.p)
    raise TypeError(ob)


def obstacle_reach(ob: Obstacle, about: complex = 0j) -> float:
    """Largest distance from ``about`` to a point of the obstacle."""
    if isinstance(ob, Disc):
        return abs(ob.center - about) + ob.radius
    if isinstance(ob, Segment):
        return max(abs(ob.a - about), abs(ob.b - about))
    if isinstance(ob, Polygon):
        return max(abs(v - about) for v in ob.vertices)
    return abs(ob.p - about)


def obstacle_bbox(ob: Obstacle):
    if isinstance(ob, Disc):
        c, r = ob.center, ob.radius
        return c.real - r, c.real + r, c.imag - r, c.imag + r
    pts = {Segment: lambda o: (o.a, o.b), Polygon: lambda o: o.vertices, Point: lambda o: (o.p,)}[type(ob)](ob)
    xs = [p.real for p in pts]
    ys = [p.imag for p in pts]
    return min(xs), max(xs), min(ys), max(ys)


# ---------------------------------------------------------------------------
# similarities


@dataclass(frozen=True)
class Similarity:
    """z -> translation + scale * e^{i rotation} * (conj(z) if reflect else z)."""

    translation: complex = 0j
    rotation: float = 0.0
    scale: float = 1.0
    reflect: bool = False

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"similarity scale must be > 0, got {self.scale}")

    @property
    def factor(self) -> complex:
        return self.scale * complex(math.cos(self.rotation), math.sin(self.rotation))

    def linear(self, z):
        z = np.conj(z) if self.reflect else z
        return self.factor * z

    def __call__(self, z):
        return self.translation + self.linear(z)

    def linear_part(self) -> "Similarity":
        return replace(self, translation=0j)

    def after(self, first: "Similarity") -> "Similarity":
        """The composition ``self o first``."""
        t = self(first.translation)
        a1 = np.conj(first.factor) if self.reflect else first.factor
        a = self.factor * a1
        return Similarity(complex(t), math.atan2(a.imag, a.real), abs(a), self.reflect != first.reflect)


def transform_obstacle(ob: Obstacle, s: Similarity) -> Obstacle:
    if isinstance(ob, Disc):
        phase = s.rotation - ob.phase if s.reflect else s.rotation + ob.phase
        return Disc(complex(s(ob.center)), ob.radius * s.scale, phase)
    if isinstance(ob, Segment):
        return Segment(complex(s(ob.a)), complex(s(ob.b)))
    if isinstance(ob, Polygon):
        return Polygon(tuple(complex(s(v)) for v in ob.vertices))
    return Point(complex(s(ob.p)))


# ---------------------------------------------------------------------------
# scenes


def arctan_length_factor(i) -> np.ndarray:
    """Length ``arctan(i)/pi + 1/2``, computed without cancellation for i << 0."""
    return np.arctan2(1.0, -np.asarray(i, dtype=float)) / np.pi


SEQUENCES = {"arctan": arctan_length_factor}


@dataclass(frozen=True)
class Lattice:
    origin: complex
    periods: tuple  # (complex, complex)
    element: tuple  # obstacles relative to the lattice point
    sequence: str | None = None  # scale element about the lattice point by f(first index)

    def __post_init__(self):
        p, q = self.periods
        if abs(p.real * q.imag - p.imag * q.real) <= 1e-14 * (abs(p) * abs(q) + 1e-300):
            raise SceneError("lattice periods are linearly dependent", "lattice.periods")
        if self.sequence is not None and self.sequence not in SEQUENCES:
            raise SceneError(f"unknown sequence {self.sequence!r}", "lattice.sequence")
        if not self.element:
            raise SceneError("lattice element is empty", "lattice.element")

    @property
    def reach(self) -> float:
        return max(obstacle_reach(ob) for ob in self.element)

    def index_range(self, center: complex, radius: float):
        """Inclusive (i0, i1, j0, j1) covering lattice points within ``radius`` of ``center``."""
        p, q = self.periods
        m = np.array([[p.real, q.real], [p.imag, q.imag]])
        minv = np.linalg.inv(m)
        u = minv @ np.array([(center - self.origin).real, (center - self.origin).imag])
        span = radius * np.linalg.norm(minv, axis=1)
        return (math.floor(u[0] - span[0]), math.ceil(u[0] + span[0]),
                math.floor(u[1] - span[1]), math.ceil(u[1] + span[1]))

    def point(self, i: int, j: int) -> complex:
        p, q = self.periods
        return self.origin + i * p + j * q

    def instance(self, i: int, j: int) -> list:
        base = self.point(i, j)
        f = 1.0 if self.sequence is None else float(SEQUENCES[self.sequence](i))
        if not f > 0:
            return [Point(base)]
        s = Similarity(base, 0.0, f)
        out = []
        for ob in self.element:
            try:
                out.append(transform_obstacle(ob, s))
            except SceneError:
                # far out the scaled element drops below float resolution at its position
                out.append(Point(complex(s(ob.center)) if isinstance(ob, Disc) else base))
        return out

    def instances_near(self, center: complex, radius: float) -> list:
        """All replicated obstacles that can meet the closed disc D(center, radius)."""
        reach = self.reach
        i0, i1, j0, j1 = self.index_range(center, radius + reach)
        out = []
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if abs(self.point(i, j) - center) <= radius + reach:
                    out.extend(self.instance(i, j))
        return out


@dataclass(frozen=True)
class Scene:
    mode: str = "complement"
    obstacles: tuple = ()
    base_disc: Disc | None = None
    lattice: Lattice | None = None
    escape_centers: tuple = ()
    name: str | None = None

    def __post_init__(self):
        if self.mode not in ("complement", "bounded"):
            raise SceneError(f"unknown mode {self.mode!r}", "mode")
        if self.mode == "bounded" and self.base_disc is None:
            raise SceneError("bounded mode requires base_disc", "base_disc")
        if self.mode == "complement" and self.base_disc is not None:
            raise SceneError("base_disc only allowed in bounded mode", "base_disc")

    @property
    def is_periodic(self) -> bool:
        """True when the complement is exactly invariant under the lattice."""
        return (self.lattice is not None and self.lattice.sequence is None
                and not self.obstacles and self.mode == "complement")

    def obstacles_near(self, center: complex, radius: float) -> list:
        """Explicit and lattice obstacles that can meet D(center, radius)."""
        out = [ob for ob in self.obstacles
               if np.min(obstacle_distance(ob, np.array([center]))) <= radius]
        if self.lattice is not None:
            out.extend(self.lattice.instances_near(center, radius))
        return out

    def is_polar_complement(self) -> bool:
        """Complement symbolically polar: empty or made of point obstacles only."""
        if self.mode == "bounded":
            return False
        obs = list(self.obstacles)
        if self.lattice is not None:
            obs.extend(self.lattice.element)
        return all(isinstance(ob, Point) for ob in obs)

    def restricted_to_disc(self, center: complex, radius: float) -> "Scene":
        """The scene for Omega intersected with the open disc D(center, radius)."""
        if self.mode == "bounded":
            raise SceneError("restriction of bounded scenes is not supported", "mode")
        obs = tuple(self.obstacles_near(center, radius))
        return Scene("bounded", obs, Disc(complex(center), float(radius)), None, (), self.name)

    def with_obstacles(self, extra: Iterable[Obstacle]) -> "Scene":
        return replace(self, obstacles=tuple(self.obstacles) + tuple(extra))


def contains(scene: Scene, z) -> np.ndarray | bool:
    """True where ``z`` lies in Omega; obstacle boundaries are not in Omega."""
    scalar = np.ndim(z) == 0
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    out = _membership(scene, zs, include_points=True)
    return bool(out[0]) if scalar else out


def _membership(scene: Scene, zs: np.ndarray, include_points: bool, thin_margin: float = 0.0):
    out = np.ones(zs.shape, dtype=bool)
    if zs.size == 0:
        return out
    if scene.mode == "bounded":
        out &= np.abs(zs - scene.base_disc.center) < scene.base_disc.radius
    c = complex((zs.real.min() + zs.real.max()) / 2, (zs.imag.min() + zs.imag.max()) / 2)
    rad = float(np.max(np.abs(zs - c)))
    for ob in scene.obstacles_near(c, rad + thin_margin):
        if isinstance(ob, Point) and not include_points:
            continue
        out &= ~_blocked(ob, zs, thin_margin)
    return out


def _blocked(ob: Obstacle, zs: np.ndarray, thin_margin: float) -> np.ndarray:
    if isinstance(ob, Segment) and thin_margin > 0:
        return segment_distance(zs, ob.a, ob.b) <= thin_margin
    return obstacle_contains(ob, zs)


def transform(scene: Scene, s: Similarity) -> Scene:
    """Image of the scene under a similarity."""
    lin = s.linear_part()
    lat = None
    if scene.lattice is not None:
        L = scene.lattice
        lat = Lattice(complex(s(L.origin)), tuple(complex(lin(p)) for p in L.periods),
                      tuple(transform_obstacle(ob, lin) for ob in L.element), L.sequence)
    base = transform_obstacle(scene.base_disc, s) if scene.base_disc is not None else None
    return Scene(scene.mode, tuple(transform_obstacle(ob, s) for ob in scene.obstacles), base, lat,
                 tuple(complex(s(c)) for c in scene.escape_centers), scene.name)


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Nodes ``origin + h*(i + 1j*k)`` for 0 <= i <= nx, 0 <= k <= ny; mask indexed [i, k]."""

    origin: complex
    h: float
    nx: int
    ny: int
    interior_mask: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return (self.nx + 1, self.ny + 1)

    def coords(self) -> np.ndarray:
        i = np.arange(self.nx + 1)[:, None]
        k = np.arange(self.ny + 1)[None, :]
        return self.origin + self.h * (i + 1j * k)

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())

    def restrict(self, mask: np.ndarray) -> "GridDomain":
        return GridDomain(self.origin, self.h, self.nx, self.ny, self.interior_mask & mask)


def _grid_count(length: float, h: float) -> int:
    n = length / h
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ValueError(f"box side {length} is not a multiple of h={h}")
    return k


def rasterize(scene: Scene, box: Sequence[float], h: float,
              max_nodes: int = DEFAULT_NODE_BUDGET) -> GridDomain:
    """Grid mask of nodes strictly inside ``box = (xmin, xmax, ymin, ymax)`` and in Omega.

    Segments suppress every node within h/2 so slits are never invisible.
    Point obstacles are ignored: they are polar and do not change H^1_0.
    """
    if not h > 0:
        raise ValueError("h must be > 0")
    xmin, xmax, ymin, ymax = map(float, box)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("degenerate box")
    nx, ny = _grid_count(xmax - xmin, h), _grid_count(ymax - ymin, h)
    if (nx + 1) * (ny + 1) > max_nodes:
        raise GridTooLargeError(f"{(nx + 1) * (ny + 1)} nodes exceeds budget {max_nodes}")
    origin = complex(xmin, ymin)
    i = np.arange(nx + 1)[:, None]
    k = np.arange(ny + 1)[None, :]
    z = origin + h * (i + 1j * k)
    mask = np.zeros((nx + 1, ny + 1), dtype=bool)
    mask[1:-1, 1:-1] = True
    if scene.mode == "bounded":
        mask &= np.abs(z - scene.base_disc.center) < scene.base_disc.radius
    c = complex((xmin + xmax) / 2, (ymin + ymax) / 2)
    rad = abs(complex(xmax, ymax) - c)
    margin = h / 2
    for ob in scene.obstacles_near(c, rad + margin):
        if isinstance(ob, Point):
            continue
        x0, x1, y0, y1 = obstacle_bbox(ob)
        ia = max(0, math.floor((x0 - margin - xmin) / h))
        ib = min(nx, math.ceil((x1 + margin - xmin) / h))
        ka = max(0, math.floor((y0 - margin - ymin) / h))
        kb = min(ny, math.ceil((y1 + margin - ymin) / h))
        if ia > ib or ka > kb:
            continue
        sub = z[ia:ib + 1, ka:kb + 1]
        mask[ia:ib + 1, ka:kb + 1] &= ~_blocked(ob, sub, margin)
    return GridDomain(origin, float(h), nx, ny, mask)


# ---------------------------------------------------------------------------
# JSON scene files

OBSTACLE_FIELDS = {
    "disc": {"kind", "center", "radius", "phase"},
    "segment": {"kind", "a", "b"},
    "polygon": {"kind", "vertices"},
    "point": {"kind", "p"},
}
SCENE_FIELDS = {"schema_version", "mode", "base_disc", "obstacles", "lattice", "named", "escape_centers"}
LATTICE_FIELDS = {"origin", "periods", "element", "sequence"}


def _pt(v, path) -> complex:
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
        raise SceneError("expected a point [x, y]", path)
    if not all(math.isfinite(c) for c in v):
        raise SceneError("non-finite coordinate", path)
    return complex(float(v[0]), float(v[1]))


def _num(v, path) -> float:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise SceneError("expected a finite number", path)
    return float(v)


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        raise SceneError("expected an object", path)
    extra = set(d) - allowed
    if extra:
        raise SceneError(f"unknown field(s) {sorted(extra)}", path)


def parse_obstacle(d, path="obstacle") -> Obstacle:
    if not isinstance(d, dict) or d.get("kind") not in OBSTACLE_FIELDS:
        raise SceneError(f"kind must be one of {sorted(OBSTACLE_FIELDS)}", f"{path}.kind")
    kind = d["kind"]
    _check_keys(d, OBSTACLE_FIELDS[kind], path)
    try:
        if kind == "disc":
            return Disc(_pt(d.get("center"), f"{path}.center"), _num(d.get("radius"), f"{path}.radius"),
                        _num(d.get("phase", 0.0), f"{path}.phase"))
        if kind == "segment":
            return Segment(_pt(d.get("a"), f"{path}.a"), _pt(d.get("b"), f"{path}.b"))
        if kind == "polygon":
            vs = d.get("vertices")
            if not isinstance(vs, list):
                raise SceneError("expected a list of points", f"{path}.vertices")
            return Polygon(tuple(_pt(v, f"{path}.vertices[{i}]") for i, v in enumerate(vs)))
        return Point(_pt(d.get("p"), f"{path}.p"))
    except SceneError as e:
        if e.path.startswith(path):
            raise
        raise SceneError(str(e).split(": ", 1)[-1], f"{path}.{e.path}") from None


def scene_from_dict(d: dict) -> Scene:
    _check_keys(d, SCENE_FIELDS, "scene")
    if "named" in d:
        from .scenes import builtin_scene

        named = d["named"]
        if isinstance(named, str):
            named = {"name": named}
        _check_keys(named, {"name", "eps", "spacing", "length"}, "named")
        if set(d) - {"named", "schema_version"}:
            raise SceneError("named scenes take no other fields", "named")
        params = {k: _num(v, f"named.{k}") for k, v in named.items() if k != "name"}
        return builtin_scene(named.get("name"), **params)
    mode = d.get("mode", "complement")
    if not isinstance(mode, str):
        raise SceneError("expected a string", "mode")
    obs_raw = d.get("obstacles", [])
    if not isinstance(obs_raw, list):
        raise SceneError("expected a list", "obstacles")
    obstacles = tuple(parse_obstacle(o, f"obstacles[{i}]") for i, o in enumerate(obs_raw))
    base = None
    if "base_disc" in d:
        bd = d["base_disc"]
        _check_keys(bd, {"center", "radius"}, "base_disc")
        base = Disc(_pt(bd.get("center"), "base_disc.center"), _num(bd.get("radius"), "base_disc.radius"))
    lattice = None
    if "lattice" in d and d["lattice"] is not None:
        ld = d["lattice"]
        _check_keys(ld, LATTICE_FIELDS, "lattice")
        periods = ld.get("periods")
        if not isinstance(periods, list) or len(periods) != 2:
            raise SceneError("expected two period vectors", "lattice.periods")
        el = ld.get("element")
        if not isinstance(el, list):
            raise SceneError("expected a list", "lattice.element")
        lattice = Lattice(_pt(ld.get("origin", [0, 0]), "lattice.origin"),
                          tuple(_pt(p, f"lattice.periods[{i}]") for i, p in enumerate(periods)),
                          tuple(parse_obstacle(o, f"lattice.element[{i}]") for i, o in enumerate(el)),
                          ld.get("sequence"))
    esc = d.get("escape_centers", [])
    if not isinstance(esc, list):
        raise SceneError("expected a list", "escape_centers")
    escape = tuple(_pt(c, f"escape_centers[{i}]") for i, c in enumerate(esc))
    return Scene(mode, obstacles, base, lattice, escape)


def parse_scene(text: str) -> Scene:
    """Parse and validate a JSON scene document."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneSyntaxError(f"malformed JSON: {e.msg} (line {e.lineno}, col {e.colno})") from None
    if not isinstance(d, dict):
        raise SceneSyntaxError("scene document must be a JSON object")
    return scene_from_dict(d)


def _xy(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def obstacle_to_dict(ob: Obstacle) -> dict:
    if isinstance(ob, Disc):
        d = {"kind": "disc", "center": _xy(ob.center), "radius": ob.radius}
        if ob.phase:
            d["phase"] = ob.phase
        return d
    if isinstance(ob, Segment):
        return {"kind": "segment", "a": _xy(ob.a), "b": _xy(ob.b)}
    if isinstance(ob, Polygon):
        return {"kind": "polygon", "vertices": [_xy(v) for v in ob.vertices]}
    return {"kind": "point", "p": _xy(ob.p)}


def scene_to_dict(scene: Scene) -> dict:
    d = {"schema_version": 1, "mode": scene.mode, "obstacles": [obstacle_to_dict(o) for o in scene.obstacles]}
    if scene.base_disc is not None:
        d["base_disc"] = {"center": _xy(scene.base_disc.center), "radius": scene.base_disc.radius}
    if scene.lattice is not None:
        L = scene.lattice
        d["lattice"] = {"origin": _xy(L.origin), "periods": [_xy(p) for p in L.periods],
                        "element": [obstacle_to_dict(o) for o in L.element], "sequence": L.sequence}
    if scene.escape_centers:
        d["escape_centers"] = [_xy(c) for c in scene.escape_centers]
    return d


# ---------------------------------------------------------------------------
# compact clips of the complement


@dataclass(frozen=True)
class CompactSet:
    """Finite union of closed primitives.

    ``hausdorff_tol`` records how far polygonized arcs may sit inside the
    exact set they replace (polygons are inscribed, so pieces never leave it).
    """

    pieces: tuple = ()
    center: complex = 0j
    bounding_radius: float = 0.0
    hausdorff_tol: float = 0.0

    @classmethod
    def from_pieces(cls, pieces: Iterable[Obstacle], hausdorff_tol: float = 0.0) -> "CompactSet":
        pieces = tuple(pieces)
        if not pieces:
            return cls((), 0j, 0.0, hausdorff_tol)
        bb = np.array([obstacle_bbox(p) for p in pieces])
        c = complex((bb[:, 0].min() + bb[:, 1].max()) / 2, (bb[:, 2].min() + bb[:, 3].max()) / 2)
        r = max(obstacle_reach(p, c) for p in pieces)
        return cls(pieces, c, float(r), hausdorff_tol)

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def is_polar(self) -> bool:
        return all(isinstance(p, Point) for p in self.pieces)

    def contains(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape, dtype=bool)
        for p in self.pieces:
            out |= obstacle_contains(p, z)
        return out

    def transformed(self, s: Similarity) -> "CompactSet":
        return CompactSet.from_pieces((transform_obstacle(p, s) for p in self.pieces),
                                      self.hausdorff_tol * s.scale)

    def union(self, other: "CompactSet") -> "CompactSet":
        return CompactSet.from_pieces(self.pieces + other.pieces, max(self.hausdorff_tol, other.hausdorff_tol))


def arc_points(center: complex, r: float, t0: float, t1: float, tol: float) -> np.ndarray:
    """Inscribed polyline on the arc from angle t0 to t1 (t1 > t0), endpoints included."""
    tol = min(tol, 0.5 * r)
    step = min(2 * math.acos(1 - tol / r), math.pi / 12)
    m = max(2, math.ceil((t1 - t0) / step))
    t = np.linspace(t0, t1, m + 1)
    return center + r * np.exp(1j * t)


def _circle_intersections(c1: complex, r1: float, c2: complex, r2: float):
    d = abs(c2 - c1)
    a = (r1 ** 2 - r2 ** 2 + d ** 2) / (2 * d)
    hh = math.sqrt(max(r1 ** 2 - a ** 2, 0.0))
    u = (c2 - c1) / d
    p = c1 + a * u
    return p + 1j * u * hh, p - 1j * u * hh


def _lens(c1: complex, r1: float, c2: complex, r2: float, tol: float) -> Polygon:
    """Polygon inscribed in D(c1, r1) intersected with D(c2, r2) (circles crossing)."""
    p, q = _circle_intersections(c1, r1, c2, r2)

    def inner_arc(c, r, other_c, other_r, start, end):
        a0 = math.atan2((start - c).imag, (start - c).real)
        a1 = math.atan2((end - c).imag, (end - c).real)
        if a1 <= a0:
            a1 += 2 * math.pi
        mid = c + r * complex(math.cos((a0 + a1) / 2), math.sin((a0 + a1) / 2))
        if abs(mid - other_c) > other_r:
            a0, a1 = a1, a0 + 2 * math.pi
        return arc_points(c, r, a0, a1, tol)

    arc1 = inner_arc(c1, r1, c2, r2, p, q)
    arc2 = inner_arc(c2, r2, c1, r1, arc1[-1], arc1[0])
    pts = np.concatenate([arc1, arc2[1:-1]])
    return Polygon(tuple(complex(z) for z in pts))


def _clip_segment(seg: Segment, c: complex, R: float):
    d = seg.b - seg.a
    f = seg.a - c
    A = abs(d) ** 2
    B = 2 * (f * np.conj(d)).real
    C = abs(f) ** 2 - R ** 2
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    t0, t1 = max(0.0, (-B - sq) / (2 * A)), min(1.0, (-B + sq) / (2 * A))
    if t0 > t1:
        return None
    if t0 == 0.0 and t1 == 1.0:
        return seg
    a, b = seg.a + t0 * d, seg.a + t1 * d
    return Point(a) if a == b else Segment(a, b)


def _clip_polygon(poly: Polygon, c: complex, R: float, tol: float):
    if all(abs(v - c) <= R for v in poly.vertices):
        return [poly]
    import shapely.geometry as sg

    circle = arc_points(c, R, 0.0, 2 * math.pi, tol)[:-1]
    inter = sg.Polygon([(z.real, z.imag) for z in poly.vertices]).intersection(
        sg.Polygon([(z.real, z.imag) for z in circle]))
    out = []
    geoms = getattr(inter, "geoms", [inter])
    for g in geoms:
        if g.is_empty:
            continue
        if g.geom_type == "Polygon" and g.area > 0:
            vs = [complex(x, y) for x, y in list(g.exterior.coords)[:-1]]
            try:
                out.append(Polygon(tuple(vs)))
            except SceneError:
                pass
        elif g.geom_type == "LineString":
            cs = list(g.coords)
            out.append(Segment(complex(*cs[0]), complex(*cs[-1])))
        elif g.geom_type == "Point":
            out.append(Point(complex(g.x, g.y)))
    return out


def clip_obstacle(ob: Obstacle, c: complex, R: float, tol: float) -> list:
    """Pieces of ``ob`` inside the closed disc D(c, R)."""
    if isinstance(ob, Point):
        return [ob] if abs(ob.p - c) <= R else []
    if isinstance(ob, Segment):
        s = _clip_segment(ob, c, R)
        return [] if s is None else [s]
    if isinstance(ob, Disc):
        d = abs(ob.center - c)
        if d + ob.radius <= R:
            return [ob]
        if d > R + ob.radius:
            return []
        if d == R + ob.radius:
            return [Point(c + R * (ob.center - c) / d)]
        if d + R <= ob.radius:
            return [Disc(c, R, ob.phase)]
        return [_lens(ob.center, ob.radius, c, R, tol)]
    return _clip_polygon(ob, c, R, tol)


def _outside_base(base: Disc, c: complex, R: float, tol: float) -> list:
    """Closed complement of the base disc intersected with D(c, R), polygonized."""
    d = abs(c - base.center)
    if d + R < base.radius:
        return []
    if d >= R + base.radius:
        return [Disc(c, R)]
    if d + base.radius <= R:
        # annulus; capacity only sees the outer boundary, so keep the filled disc
        return [Disc(c, R)]
    import shapely.geometry as sg

    outer = arc_points(c, R, 0.0, 2 * math.pi, tol)[:-1]
    # circumscribed polygon for the hole keeps the result inside the true set
    m = len(arc_points(base.center, base.radius, 0.0, 2 * math.pi, tol)) - 1
    hole = base.center + base.radius / math.cos(math.pi / m) * np.exp(2j * math.pi * np.arange(m) / m)
    diff = sg.Polygon([(z.real, z.imag) for z in outer]).difference(
        sg.Polygon([(z.real, z.imag) for z in hole]))
    out = []
    for g in getattr(diff, "geoms", [diff]):
        if g.geom_type == "Polygon" and g.area > 0:
            vs = [complex(x, y) for x, y in list(g.exterior.coords)[:-1]]
            try:
                out.append(Polygon(tuple(vs)))
            except SceneError:
                pass
    return out


def clip_complement(scene: Scene, center: complex, R: float, tol: float | None = None) -> CompactSet:
    """Omega^c intersected with the closed disc D(center, R) as a finite list of pieces.

    Arcs cut by the clip circle are polygonized (inscribed) with Hausdorff
    tolerance ``tol``, default 1e-3 * R.
    """
    if not R > 0:
        raise ValueError("clip radius must be > 0")
    tol = 1e-3 * R if tol is None else tol
    center = complex(center)
    pieces = []
    for ob in scene.obstacles_near(center, R):
        pieces.extend(clip_obstacle(ob, center, R, tol))
    if scene.mode == "bounded":
        pieces.extend(_outside_base(scene.base_disc, center, R, tol))
    return CompactSet.from_pieces(pieces, tol if any(isinstance(p, Polygon) for p in pieces) else 0.0)
