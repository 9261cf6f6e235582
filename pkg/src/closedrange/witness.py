"""Bounded strictly subharmonic witnesses.

``select_cell_compacts`` / ``eval_witness`` / ``certify_witness`` build the
lattice sum phi = sum_{j,k} exp(-4 p_{j,k}) over cells centred at
(2jM, 2kM), where p_{j,k} is the equilibrium potential of the complement
near that cell.  ``bergman_witness`` builds exp(-p_K) plus a small smooth
patch for a single non-polar compact K.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .geometry import CompactSet, Scene, clip_complement, contains
from .logcap import DiscreteMeasure, capacity, equilibrium_measure, frostman_check, potential_field

LAMBDA = 6
SHELL_SUM = float(zeta(3) + zeta(4))  # sum_{l>=2} l/(l-1)^4


class CellCapacityError(ValueError):
    def __init__(self, cell, cap_lower, delta):
        self.cell = cell
        super().__init__(f"cell {cell}: capacity lower bracket {cap_lower:.4g} < delta={delta:.4g}; "
                         "finite capacity inradius fails at this (M, delta)")


class SafeRegionError(ValueError):
    pass


class PolarSetError(ValueError):
    pass


def shell_term(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    return lam / (lam - 1) ** 4


def tail_bound(M: float, Lambda: int) -> float:
    """(8/M^4) * sum_{l > Lambda} l/(l-1)^4, via zeta(3)+zeta(4) minus the partial sum."""
    if Lambda < 1:
        raise ValueError("Lambda must be >= 1")
    partial = float(np.sum(shell_term(np.arange(2, Lambda + 1)))) if Lambda >= 2 else 0.0
    return 8.0 / M ** 4 * max(0.0, SHELL_SUM - partial)


@dataclass(frozen=True, eq=False)
class WitnessField:
    M: float
    delta: float
    cell_measures: dict = field(repr=False)  # (j, k) -> DiscreteMeasure
    cell_caps: dict = field(repr=False)  # (j, k) -> CapacityReport
    window: tuple  # (j0, j1, k0, k1) inclusive
    truncation_shell: int = LAMBDA
    tail_bound: float = 0.0
    failed_cells: tuple = ()

    @property
    def complete(self) -> bool:
        return not self.failed_cells

    def center(self, j, k) -> complex:
        return complex(2 * j * self.M, 2 * k * self.M)

    def home(self, z):
        z = np.asarray(z, dtype=complex)
        return (np.floor(z.real / (2 * self.M) + 0.5).astype(int),
                np.floor(z.imag / (2 * self.M) + 0.5).astype(int))


@dataclass(frozen=True, eq=False)
class WitnessEval:
    value_lo: np.ndarray
    value_hi: np.ndarray
    grad: np.ndarray  # complex packed real gradient
    laplacian_lo: np.ndarray


def select_cell_compacts(scene: Scene, M: float, delta: float, budget: int = 64, window=None,
                         Lambda: int = LAMBDA, strict: bool = True) -> WitnessField:
    """Equilibrium measures of the complement inside D((2jM, 2kM), M + 2 delta) for every cell of the window.

    The default window is |j|, |k| <= Lambda + 1, enough to evaluate the
    witness on the cells around the origin.  A cell whose capacity lower
    bracket is below ``delta`` raises :class:`CellCapacityError` when
    ``strict``; otherwise it is listed in ``failed_cells``.
    """
    if not (M > 0 and delta > 0):
        raise ValueError("M and delta must be > 0")
    if not 2 * delta < M:
        raise ValueError("need 2*delta < M")
    if window is None:
        window = (-(Lambda + 1), Lambda + 1, -(Lambda + 1), Lambda + 1)
    j0, j1, k0, k1 = (int(v) for v in window)
    radius = M + 2 * delta
    measures, caps, failed = {}, {}, []
    for j in range(j0, j1 + 1):
        for k in range(k0, k1 + 1):
            c = complex(2 * j * M, 2 * k * M)
            K = clip_complement(scene, c, radius)
            rep = capacity(K, budget)
            caps[(j, k)] = rep
            if rep.lower < delta:
                if strict:
                    raise CellCapacityError((j, k), rep.lower, delta)
                failed.append((j, k))
                continue
            measures[(j, k)] = equilibrium_measure(K, budget)
    return WitnessField(float(M), float(delta), measures, caps, (j0, j1, k0, k1), int(Lambda),
                        tail_bound(M, Lambda), tuple(failed))


def _partial_sums(w: WitnessField, z: np.ndarray, hj: np.ndarray, hk: np.ndarray):
    """Partial sums over cells within Chebyshev distance Lambda of the given home cells."""
    L = w.truncation_shell
    val = np.zeros(z.shape)
    grad = np.zeros(z.shape, dtype=complex)
    lap = np.zeros(z.shape)
    for (j, k), m in w.cell_measures.items():
        sel = (np.abs(hj - j) <= L) & (np.abs(hk - k) <= L)
        if not sel.any():
            continue
        p, gp = potential_field(m, z[sel])
        e = np.exp(-4 * p)
        val[sel] += e
        grad[sel] += -4 * e * gp
        lap[sel] += 16 * e * np.abs(gp) ** 2
    return val, grad, lap


def _check_safe(w: WitnessField, hj, hk):
    j0, j1, k0, k1 = w.window
    L = w.truncation_shell
    ok = (hj - L >= j0) & (hj + L <= j1) & (hk - L >= k0) & (hk + L <= k1)
    if not np.all(ok):
        raise SafeRegionError("evaluation point too close to the edge of the cell window")


def eval_witness(w: WitnessField, z) -> WitnessEval:
    """Interval value, gradient and Laplacian lower bound of the truncated witness at z (array or scalar)."""
    if not w.complete:
        raise ValueError(f"witness field is incomplete: failed cells {list(w.failed_cells)}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    hj, hk = w.home(z)
    _check_safe(w, hj, hk)
    val, grad, lap = _partial_sums(w, z, hj, hk)
    return WitnessEval(val, val + w.tail_bound, grad, lap)


def _geometry_inequalities(w: WitnessField, z: np.ndarray) -> dict:
    """Per-sample check of Re(z-w) >= M and sqrt(2) M < |z-w| < sqrt(98) M for w in cell (j0-2, k0-2)."""
    hj, hk = w.home(z)
    M = w.M
    ok = np.ones(z.shape, dtype=bool)
    for idx in np.ndindex(z.shape):
        m = w.cell_measures.get((int(hj[idx]) - 2, int(hk[idx]) - 2))
        if m is None:
            ok[idx] = False
            continue
        d = z[idx] - m.nodes
        ok[idx] = bool(np.all(d.real >= M) and np.all(np.abs(d) > math.sqrt(2) * M)
                       and np.all(np.abs(d) < math.sqrt(98) * M))
    return {"checked": int(z.size), "holding": int(ok.sum()), "all_hold": bool(ok.all())}


def laplacian_cross_check(w: WitnessField, z, steps=(1e-2, 5e-3)) -> dict:
    """Central-difference Laplacian of the partial sum against the analytic 16 sum e^{-4p} |grad p|^2.

    The set of included cells is frozen at each sample's home cell, so the
    finite-difference stencil differentiates one fixed smooth function.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    hj, hk = w.home(z)
    _check_safe(w, hj, hk)
    _, _, exact = _partial_sums(w, z, hj, hk)
    errs = []
    for h in steps:
        f0 = _partial_sums(w, z, hj, hk)[0]
        nb = sum(_partial_sums(w, z + d, hj, hk)[0] for d in (h, -h, 1j * h, -1j * h))
        fd = (nb - 4 * f0) / h ** 2
        errs.append(float(np.max(np.abs(fd - exact) / np.abs(exact))))
    rates = [math.log(a / b) / math.log(s / t) for a, b, s, t in zip(errs, errs[1:], steps, steps[1:]) if b > 0]
    return {"steps": list(steps), "max_rel_error": errs, "observed_order": rates}


@dataclass(frozen=True)
class WitnessCertificate:
    M: float
    delta: float
    Lambda: int
    n_samples: int
    sup_value: float
    sup_value_bound: float
    home_inclusive_bound: float
    inf_laplacian: float
    paper_floor: float
    corrected_floor: float
    geometry: dict
    passed: bool

    def to_dict(self) -> dict:
        return {"M": self.M, "delta": self.delta, "Lambda": self.Lambda, "n_samples": self.n_samples,
                "sup_value": self.sup_value, "sup_value_bound": self.sup_value_bound,
                "home_inclusive_bound": self.home_inclusive_bound, "inf_laplacian": self.inf_laplacian,
                "paper_floor": self.paper_floor, "corrected_floor": self.corrected_floor,
                "geometry": self.geometry, "pass": self.passed}


def certify_witness(w: WitnessField, samples, scene: Scene | None = None) -> WitnessCertificate:
    """Sampled certificate: bounded values and a positive Laplacian lower bound.

    The value bound is 8 delta^-4 + (8/M^4)(zeta(3)+zeta(4)).  Counting the
    home cell too gives 9 delta^-4 + ..., reported as ``home_inclusive_bound``.
    The floor 2/(49 M^5) is reported for comparison only; ``corrected_floor``
    16/(98^4 M^6) is what the distance bounds in ``geometry`` actually give.
    """
    if not w.complete:
        raise ValueError(f"witness field is incomplete: failed cells {list(w.failed_cells)}")
    z = np.atleast_1d(np.asarray(samples, dtype=complex)).ravel()
    if z.size == 0:
        raise ValueError("empty sample set")
    if scene is not None and not np.all(contains(scene, z)):
        raise ValueError("samples must lie in Omega")
    ev = eval_witness(w, z)
    M, d = w.M, w.delta
    bound = 8 * d ** -4 + 8 * SHELL_SUM / M ** 4
    sup = float(ev.value_hi.max())
    inf_lap = float(ev.laplacian_lo.min())
    geo = _geometry_inequalities(w, z)
    passed = bool(inf_lap > 0 and sup <= bound * (1 + 1e-12))
    return WitnessCertificate(M, d, w.truncation_shell, int(z.size), sup, bound,
                              9 * d ** -4 + 8 * SHELL_SUM / M ** 4, inf_lap,
                              2 / (49 * M ** 5), 16 / (98 ** 4 * M ** 6), geo, passed)


def period_samples(scene: Scene, n: int = 64, cell=None) -> np.ndarray:
    """Cell-centred n x n samples over one lattice period cell, restricted to Omega."""
    if cell is None:
        lat = scene.lattice
        origin, (p, q) = lat.origin, lat.periods
    else:
        origin, p, q = cell
    t = (np.arange(n) + 0.5) / n
    z = (origin + t[:, None] * p + t[None, :] * q).ravel()
    return z[contains(scene, z)]


def samples_to_csv(z, ev: WitnessEval) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x", "y", "value_lo", "value_hi", "laplacian_lo"])
    for zi, a, b, c in zip(np.ravel(z), ev.value_lo, ev.value_hi, ev.laplacian_lo):
        wr.writerow([repr(float(zi.real)), repr(float(zi.imag)), repr(float(a)), repr(float(b)), repr(float(c))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Bergman witness


def _f(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1 / x[pos])
    return out


def _f_derivs(x):
    f = _f(x)
    xs = np.where(x > 0, x, 1.0)
    return f, f / xs ** 2, f * (1 - 2 * xs) / xs ** 4


def smooth_step(x):
    """C-infinity step, 0 for x <= 0 and 1 for x >= 1, with first and second derivatives."""
    x = np.asarray(x, dtype=float)
    f, f1, f2 = _f_derivs(x)
    g, g1, g2 = _f_derivs(1 - x)
    g1 = -g1
    D, D1, D2 = f + g, f1 + g1, f2 + g2
    S = f / D
    S1 = f1 / D - f * D1 / D ** 2
    S2 = f2 / D - 2 * f1 * D1 / D ** 2 - f * D2 / D ** 2 + 2 * f * D1 ** 2 / D ** 3
    return S, S1, S2


@dataclass(frozen=True)
class Cutoff:
    """chi(t) = t * eta(t), eta = 1 for t <= T1 and 0 for t >= T2 (t = |z - z0|^2)."""

    T1: float
    T2: float

    def derivs(self, t):
        t = np.asarray(t, dtype=float)
        w = self.T2 - self.T1
        S, S1, S2 = smooth_step((self.T2 - t) / w)
        eta, eta1, eta2 = S, -S1 / w, S2 / w ** 2
        return t * eta, eta + t * eta1, 2 * eta1 + t * eta2

    def laplacian(self, t):
        """Laplacian in z of chi(|z - z0|^2): 4 chi'(t) + 4 t chi''(t)."""
        _, c1, c2 = self.derivs(t)
        return 4 * c1 + 4 * t * c2


@dataclass(frozen=True, eq=False)
class BergmanWitness:
    measure: DiscreteMeasure = field(repr=False)
    cap_lower: float
    z0: complex
    r_inner: float  # B' radius; B and B'' have radii 2x and 3x
    cutoff: Cutoff
    epsilon: float
    chi_max: float

    def evaluate(self, z):
        """(phi_B, Laplacian of phi_B) at points of Omega."""
        z = np.asarray(z, dtype=complex)
        p, gp = potential_field(self.measure, z)
        t = np.abs(z - self.z0) ** 2
        chi, _, _ = self.cutoff.derivs(t)
        e = np.exp(-p)
        return e + self.epsilon * chi, e * np.abs(gp) ** 2 + self.epsilon * self.cutoff.laplacian(t)


@dataclass(frozen=True)
class BergmanCertificate:
    epsilon: float
    n_samples: int
    inf_laplacian_inside: float
    inf_laplacian_outside: float
    sup_value: float
    value_bound: float
    frostman_ok: bool
    angle_ok: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "n_samples": self.n_samples,
                "inf_laplacian_inside": self.inf_laplacian_inside,
                "inf_laplacian_outside": self.inf_laplacian_outside, "sup_value": self.sup_value,
                "value_bound": self.value_bound, "frostman_ok": self.frostman_ok,
                "angle_ok": self.angle_ok, "pass": self.passed}


def _ring_samples(z0, r0, r1, n_r, n_t, phase=0.1234):
    r = np.linspace(r0, r1, n_r)
    t = phase + 2 * np.pi * np.arange(n_t) / n_t
    return (z0 + r[:, None] * np.exp(1j * t[None, :])).ravel()


def _off_K(K: CompactSet, m: DiscreteMeasure, z, gap: float):
    # the discrete potential is only resolved at least one node spacing away from the nodes
    far = np.min(np.abs(z[:, None] - m.nodes[None, :]), axis=1) > gap
    return z[far & ~K.contains(z)]


def bergman_witness(K: CompactSet, budget: int = 128, n_samples: int = 64):
    """Witness exp(-p_K) + eps chi(|z - z0|^2) for Omega = C minus K, and its sampled certificate.

    B' = D(z0, r) contains K, B = D(z0, 2r) and B'' = D(z0, 3r).  eps is half
    of the smallest sampled exp(-p)|grad p|^2 on the annulus B'' minus B over
    the largest |Laplacian of the patch| there.
    """
    if K.is_empty or K.is_polar:
        raise PolarSetError("compact set is polar; no bounded subharmonic witness of this form")
    rep = capacity(K, budget)
    if not rep.lower > 0:
        raise PolarSetError("capacity lower bracket is not positive")
    m = equilibrium_measure(K, budget)
    z0 = K.center
    r = K.bounding_radius * (1 + 1e-6)
    cut = Cutoff((2 * r) ** 2, (3 * r) ** 2)
    ann = _ring_samples(z0, 2 * r, 3 * r, n_samples, 4 * n_samples)
    pa, gp = potential_field(m, ann)
    mass = np.exp(-pa) * np.abs(gp) ** 2
    tt = np.linspace(cut.T1, cut.T2, 4097)
    lap_max = float(np.max(np.abs(cut.laplacian(tt))))
    eps = 0.5 * float(mass.min()) / lap_max
    chi_max = float(np.max(cut.derivs(np.linspace(0, cut.T2, 4097))[0]))
    wit = BergmanWitness(m, rep.lower, z0, r, cut, eps, chi_max)
    return wit, certify_bergman(wit, K, n_samples)


def _node_spacing(m: DiscreteMeasure) -> float:
    d = np.abs(m.nodes[:, None] - m.nodes[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).max())


def certify_bergman(wit: BergmanWitness, K: CompactSet, n_samples: int = 64) -> BergmanCertificate:
    m, r, z0 = wit.measure, wit.r_inner, wit.z0
    gap = min(2 * _node_spacing(m), r / 4) if m.n > 1 else r / 10
    inside = _off_K(K, m, _ring_samples(z0, 0.0, 3 * r, n_samples, 4 * n_samples), gap)
    outside = _ring_samples(z0, 3 * r, 12 * r, n_samples, 4 * n_samples)
    val_in, lap_in = wit.evaluate(inside)
    val_out, lap_out = wit.evaluate(outside)
    bound = 1 / wit.cap_lower + wit.epsilon * wit.chi_max
    sup = float(max(val_in.max(), val_out.max()))
    fr = frostman_check(m, np.concatenate([inside, outside]))
    e_all = np.exp(-potential_field(m, np.concatenate([inside, outside]))[0])
    frostman_ok = bool(np.all(e_all <= 1 / wit.cap_lower))
    # outside B the disc B' subtends an angle below pi/3, so the kernel gradients cannot cancel
    far = np.concatenate([inside, outside])
    far = far[np.abs(far - z0) > 2 * r]
    _, gfar = potential_field(m, far)
    angle_ok = bool(np.all(2 * np.arcsin(np.minimum(1, r / np.abs(far - z0))) < np.pi / 3 + 1e-12)
                    and np.all(np.abs(gfar) > 0))
    passed = bool(lap_in.min() > 0 and lap_out.min() > 0 and 0 < min(val_in.min(), val_out.min())
                  and sup <= bound and frostman_ok and fr["ok"] and angle_ok)
    return BergmanCertificate(wit.epsilon, int(inside.size + outside.size), float(lap_in.min()),
                              float(lap_out.min()), sup, bound, frostman_ok, angle_ok, passed)
