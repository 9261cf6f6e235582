"""Theorem-level verdicts assembled from the inradius, witness and spectral modules."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import Scene, clip_complement, obstacle_bbox, rasterize
from .inradius import DELTA_GRID, DENSITY, R_GRID, InradiusVerdict, capacity_inradius
from .logcap import capacity
from .spectral import LAMBDA_DISC, ReducedOrderWarning, lambda1, lambda1_richardson
from .witness import (LAMBDA, PolarSetError, bergman_witness, certify_witness, period_samples,
                      select_cell_compacts)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class MainParams:
    R_grid: tuple = R_GRID
    delta_grid: tuple = DELTA_GRID
    budget: int = 64
    density: int = DENSITY
    Lambda: int = LAMBDA
    samples_per_side: int = 64
    boxes: tuple = (4.0, 8.0, 16.0)
    ladder_h: float = 1 / 32
    stabilization: float = 0.05
    escape_rungs: tuple = (5.0, 20.0, 80.0)
    escape_radius: float = 2.0
    escape_h: float = 1 / 128
    threads: int | None = None


@dataclass(frozen=True)
class BergmanParams:
    radii: tuple = (1.0, 2.0, 4.0, 8.0)
    budget: int = 128
    samples: int = 64


@dataclass(frozen=True, eq=False)
class MainTheoremReport:
    scene: str | None
    verdict: str  # closed_range | not_closed_range | inconclusive
    condition3: InradiusVerdict | None
    condition4: dict | None
    condition1_2_evidence: tuple = ()
    checks: dict = field(default_factory=dict)
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "report": "main_theorem", "scene": self.scene,
                "verdict": self.verdict,
                "condition3": self.condition3.to_dict() if self.condition3 else None,
                "condition4": self.condition4, "condition1_2_evidence": list(self.condition1_2_evidence),
                "checks": self.checks, "assumptions": list(self.notes)}


@dataclass(frozen=True, eq=False)
class BergmanReport:
    scene: str | None
    dimension: str  # zero | infinite | inconclusive
    cap_complement: tuple = ()
    witness: dict | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "report": "bergman", "scene": self.scene,
                "dimension": self.dimension, "cap_complement": list(self.cap_complement),
                "witness": self.witness, "assumptions": list(self.notes)}


def _truncation_ladder(scene: Scene, p: MainParams) -> list:
    rows = []
    # one spacing for every box, so the ladder isolates truncation from discretization
    h = p.ladder_h
    for side in p.boxes:
        half = side / 2
        res = lambda1(rasterize(scene, (-half, half, -half, half), h))
        rows.append({"box_side": side, "h": h, "lambda1": res.lambda1,
                     "constant": 2 / math.sqrt(res.lambda1), "one_sided": "lambda1 >= lambda1(Omega)"})
    return rows


def _escape_ladder(scene: Scene, p: MainParams) -> list:
    rows = []
    R = p.escape_radius
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedOrderWarning)
        for m in p.escape_rungs:
            c = complex(-m, 0)
            sub = scene.restricted_to_disc(c, R)
            pad = R + 2 * p.escape_h
            box = (c.real - pad, c.real + pad, c.imag - pad, c.imag + pad)
            res = lambda1_richardson(sub, box, (2 * p.escape_h, p.escape_h))
            rows.append({"m": m, "radius": R, "h_list": list(res.h_list), "lambda1": res.lambda1,
                         "richardson": res.richardson, "constant": 2 / math.sqrt(res.best),
                         "disc_reference": LAMBDA_DISC / R ** 2,
                         "relative_gap": (res.best - LAMBDA_DISC / R ** 2) / (LAMBDA_DISC / R ** 2)})
    return rows


def _witness_delta(v: InradiusVerdict) -> tuple[float, float]:
    M = v.R_star
    return M, min(v.delta_star / 2, M / 2 - 0.01 * M)


def classify_main(scene: Scene, params: MainParams | None = None) -> MainTheoremReport:
    """Verdict on closed range of dbar for Omega, with evidence for all four conditions.

    closed_range needs a finite capacity inradius and a certified witness;
    not_closed_range needs an infinite capacity inradius; anything else
    (including unsupported scenes) is inconclusive.
    """
    p = params or MainParams()
    notes = []
    if not (scene.is_periodic or scene.escape_centers):
        return MainTheoremReport(scene.name, "inconclusive", None, None, (), {},
                                 ("unsupported scene class: neither lattice-periodic nor equipped with escape centers",))
    v = capacity_inradius(scene, p.R_grid, p.delta_grid, p.budget, p.density, p.threads)
    notes.extend(v.assumptions)
    checks = {}
    cond4 = None
    evidence = ()
    verdict = "inconclusive"
    if v.kind == "finite":
        M, delta = _witness_delta(v)
        z = period_samples(scene, p.samples_per_side)
        hj = np.floor(z.real / (2 * M) + 0.5).astype(int)
        hk = np.floor(z.imag / (2 * M) + 0.5).astype(int)
        window = (int(hj.min()) - p.Lambda - 1, int(hj.max()) + p.Lambda + 1,
                  int(hk.min()) - p.Lambda - 1, int(hk.max()) + p.Lambda + 1)
        w = select_cell_compacts(scene, M, delta, p.budget, window, p.Lambda, strict=False)
        if w.complete:
            cert = certify_witness(w, z, scene)
            cond4 = cert.to_dict()
            witness_ok = cert.passed
        else:
            cond4 = {"pass": False, "failed_cells": [list(c) for c in w.failed_cells], "M": M, "delta": delta}
            witness_ok = False
        ladder = _truncation_ladder(scene, p)
        cs = [r["constant"] for r in ladder]
        checks["constant_stabilizes"] = bool(abs(cs[-1] - cs[-2]) / cs[-2] < p.stabilization)
        evidence = tuple(ladder)
        notes.append(f"witness at M={M!r}, delta={delta!r} (R_star and min(delta_star/2, 0.49 M))")
        notes.append(f"truncation boxes {list(p.boxes)} at h = {p.ladder_h!r}; "
                     "truncated lambda1 is an upper bound for lambda1(Omega)")
        verdict = "closed_range" if witness_ok else "inconclusive"
    elif v.kind == "infinite":
        verdict = "not_closed_range"
        if scene.escape_centers:
            ladder = _escape_ladder(scene, p)
            lams = [r["richardson"] for r in ladder]
            checks["escape_lambda_decreasing"] = bool(all(b < a for a, b in zip(lams, lams[1:])))
            notes.append(f"lambda1 of Omega on discs D((-m,0), {p.escape_radius!r}) at h={p.escape_h!r} "
                         "approaching the empty-disc value shows the closed-range constant is unbounded")
        else:
            ladder = _truncation_ladder(scene, p)
            cs = [r["constant"] for r in ladder]
            checks["constant_grows"] = bool(all(b > 1.5 * a for a, b in zip(cs, cs[1:])))
            notes.append("point obstacles are polar and invisible to the grid; truncated constants grow with the box")
        evidence = tuple(ladder)
    if scene.is_polar_complement() and verdict == "closed_range":
        verdict = "inconclusive"
        checks["internal_error"] = "closed_range verdict for a polar complement"
    return MainTheoremReport(scene.name, verdict, v, cond4, evidence, checks, tuple(notes))


def _obstacle_centroid(scene: Scene) -> complex:
    if scene.mode == "bounded":
        return scene.base_disc.center
    if scene.obstacles:
        bb = np.array([obstacle_bbox(ob) for ob in scene.obstacles])
        return complex((bb[:, 0].min() + bb[:, 1].max()) / 2, (bb[:, 2].min() + bb[:, 3].max()) / 2)
    if scene.lattice is not None:
        return scene.lattice.origin
    return 0j


def classify_bergman(scene: Scene, params: BergmanParams | None = None) -> BergmanReport:
    """Zero or infinite dimension of the Bergman space, decided by the capacity of the complement."""
    p = params or BergmanParams()
    if scene.is_polar_complement():
        return BergmanReport(scene.name, "zero", (), None,
                             ("complement is empty or a union of points, hence polar",))
    c = _obstacle_centroid(scene)
    rows, chosen = [], None
    for R in p.radii:
        K = clip_complement(scene, c, R)
        rep = capacity(K, p.budget)
        rows.append({"center": [c.real, c.imag], "R": R, **rep.to_dict()})
        if chosen is None and rep.lower > 0:
            chosen = K
    if chosen is None:
        return BergmanReport(scene.name, "inconclusive", tuple(rows), None,
                             ("no clip of the complement has a positive capacity lower bracket",))
    try:
        _, cert = bergman_witness(chosen, p.budget, p.samples)
    except PolarSetError as e:
        return BergmanReport(scene.name, "inconclusive", tuple(rows), {"error": str(e)}, ())
    notes = ("witness built for C minus the first clip with positive capacity; it restricts to Omega",)
    return BergmanReport(scene.name, "infinite", tuple(rows), cert.to_dict(), notes)


def params_dict(p) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(p).items()}
