"""Capacity inradius: profiles of cap(D(z,R) minus Omega) and finite/infinite verdicts."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import Point, Scene, clip_complement, obstacle_distance
from .logcap import CapacityReport, boundary_nodes, capacity

R_GRID = (0.5, 1.0, 2.0, 4.0)
DELTA_GRID = (1e-1, 1e-2, 1e-3)
DENSITY = 8
BRACKET_SLACK = 0.02
MAX_BUDGET = 512


class UnsupportedSceneError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityProfile:
    R: float
    centers: tuple
    caps: tuple  # CapacityReport per center
    m_R: float  # min lower bracket

    @property
    def max_upper(self) -> float:
        return max(c.upper for c in self.caps)

    def to_rows(self) -> list:
        return [(z.real, z.imag, self.R, c.lower, c.estimate, c.upper) for z, c in zip(self.centers, self.caps)]

    def to_dict(self) -> dict:
        return {"R": self.R, "m_R": self.m_R,
                "caps": [{"center": [z.real, z.imag], **c.to_dict()} for z, c in zip(self.centers, self.caps)]}


@dataclass(frozen=True)
class InradiusVerdict:
    kind: str  # finite | infinite | inconclusive
    R_star: float | None = None
    delta_star: float | None = None
    witness_centers: tuple = ()
    evidence: tuple = ()
    assumptions: tuple = ()
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "finite":
            out.update(R_star=self.R_star, delta_star=self.delta_star)
        if self.witness_centers:
            out["witness_centers"] = [[z.real, z.imag] for z in self.witness_centers]
        out["checks"] = self.checks
        out["assumptions"] = list(self.assumptions)
        out["evidence"] = [p.to_dict() for p in self.evidence]
        return out


def profiles_to_csv(profiles) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["center_x", "center_y", "R", "cap_lo", "cap", "cap_hi"])
    for p in profiles:
        for row in p.to_rows():
            w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def fundamental_cell_centers(scene: Scene, density: int = DENSITY) -> list:
    """Cell-centred density x density grid over the period cell at the lattice origin."""
    if not scene.is_periodic:
        raise UnsupportedSceneError("scene is not lattice-periodic")
    if density < 1:
        raise ValueError("density must be >= 1")
    p, q = scene.lattice.periods
    t = (np.arange(density) + 0.5) / density
    return [complex(scene.lattice.origin + a * p + b * q) for a in t for b in t]


def _clip_capacity(scene: Scene, center: complex, R: float, budget: int) -> CapacityReport:
    K = clip_complement(scene, center, R)
    # clips of dense lattices hold many pieces; keep a few nodes per piece
    n = min(MAX_BUDGET, max(budget, 4 * len(K.pieces)))
    return capacity(K, n)


def capacity_profile(scene: Scene, R: float, centers, budget: int = 64, threads: int | None = None) -> CapacityProfile:
    """Capacities of the complement clipped to D(z, R) for every centre z."""
    if not R > 0:
        raise ValueError("R must be > 0")
    centers = tuple(complex(z) for z in centers)
    if not centers:
        raise ValueError("centers must be non-empty")
    workers = threads or os.cpu_count() or 1
    if workers == 1 or len(centers) == 1:
        caps = [_clip_capacity(scene, z, R, budget) for z in centers]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            caps = list(pool.map(lambda z: _clip_capacity(scene, z, R, budget), centers))
    return CapacityProfile(float(R), centers, tuple(caps), float(min(c.lower for c in caps)))


def _finite_or_polar(scene, profiles, slack):
    ms = [p.m_R for p in profiles]
    for k, m in enumerate(ms):
        if m > 0 and all(later >= m * (1 - slack) for later in ms[k + 1:]):
            return InradiusVerdict("finite", profiles[k].R, m, (), tuple(profiles),
                                   ("periodic scene: the fundamental cell grid stands in for all of C",))
    if all(m == 0 for m in ms) and scene.is_polar_complement():
        return InradiusVerdict("infinite", None, None, profiles[0].centers, tuple(profiles),
                               ("complement is a finite union of lattice points, hence polar",))
    return InradiusVerdict("inconclusive", None, None, (), tuple(profiles),
                           ("no profiled radius gives a positive capacity floor that persists",))


def clip_nesting_check(scene: Scene, centers, R: float, samples: int = 256) -> bool:
    """Translated clips shrink along the sequence: (clip at z_{k+1}) - z_{k+1} lies in (clip at z_k) - z_k.

    Verified by sampling boundary nodes of each later clip against the
    earlier one (distance tolerance scaled to the coordinates).
    """
    clips = [clip_complement(scene, z, R) for z in centers]
    for (za, Ka), (zb, Kb) in zip(zip(centers, clips), zip(centers[1:], clips[1:])):
        if Kb.is_empty:
            continue
        if Ka.is_empty:
            return False
        pts, _ = boundary_nodes(Kb, samples)
        pts = np.concatenate([pts, np.array([p.p for p in Kb.pieces if isinstance(p, Point)], dtype=complex)])
        pts = pts - zb + za
        tol = 1e-9 * (1 + abs(za) + abs(zb))
        dist = np.min([obstacle_distance(p, pts) for p in Ka.pieces], axis=0)
        if np.any(dist > tol):
            return False
    return True


def _escape_verdict(scene, R_grid, delta_grid, budget, threads):
    centers = tuple(scene.escape_centers)
    profiles = [capacity_profile(scene, R, centers, budget, threads) for R in R_grid]
    decreasing = {}
    for p in profiles:
        up = [c.upper for c in p.caps]
        decreasing[p.R] = bool(all(b <= a for a, b in zip(up, up[1:])) and up[-1] < up[0])
    smallest = profiles[0]
    floor = min(delta_grid)
    below = smallest.caps[-1].upper < floor
    nested = clip_nesting_check(scene, centers, max(R_grid))
    checks = {"upper_caps_decreasing": {repr(k): v for k, v in decreasing.items()},
              "last_upper_below_min_delta": below, "clips_nested": nested}
    assumptions = ("escape sequence supplied with the scene; caps along it are extrapolated to 0",
                   f"caps fall below min(delta_grid)={floor!r} at R={smallest.R!r}; larger R rely on the decreasing trend")
    kind = "infinite" if all(decreasing.values()) and below and nested else "inconclusive"
    return InradiusVerdict(kind, None, None, centers, tuple(profiles), assumptions, checks)


def capacity_inradius(scene: Scene, R_grid=R_GRID, delta_grid=DELTA_GRID, budget: int = 64,
                      density: int = DENSITY, threads: int | None = None,
                      slack: float = BRACKET_SLACK) -> InradiusVerdict:
    """Finite or infinite verdict on the capacity inradius.

    Periodic scenes are scanned over a fundamental cell; a finite verdict
    takes the smallest R whose conservative floor m_R is positive and stays
    (within ``slack``) at least that large for every larger R.  Scenes with
    an escape sequence are declared infinite when the upper capacity
    brackets decrease along the sequence at every R, drop below every delta
    at the smallest R, and the translated clips are nested.
    """
    R_grid = tuple(float(r) for r in R_grid)
    if list(R_grid) != sorted(R_grid) or len(set(R_grid)) != len(R_grid):
        raise ValueError("R_grid must be strictly increasing")
    if scene.is_periodic:
        centers = fundamental_cell_centers(scene, density)
        profiles = [capacity_profile(scene, R, centers, budget, threads) for R in R_grid]
        return _finite_or_polar(scene, profiles, slack)
    if scene.escape_centers:
        return _escape_verdict(scene, R_grid, delta_grid, budget, threads)
    raise UnsupportedSceneError("scene is neither lattice-periodic nor equipped with escape centers")
