"""Equilibrium measures, logarithmic potentials and logarithmic capacity.

Compact sets are discretized by nodes on their outer boundary curves.  Each
node carries the arclength ``ell`` of the boundary portion it represents; the
missing diagonal of the log kernel is replaced by ``ln(ell / 2 pi)``, the
local correction of the punctured trapezoidal rule for a log singularity.
With it the discrete energy of n equispaced nodes on a circle of radius r is
exactly ``ln r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CompactSet, Disc, Point, Polygon, Segment, polygon_contains, segment_distance

SHARP_TURN = math.radians(45.0)
# relative floor added to capacity brackets on top of the n vs n/2 spread
BRACKET_FLOOR = 1e-3


class EmptySetError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    energy_estimate: float  # -inf for polar sets
    capacity_estimate: float
    method: str = "energy_max"
    self_radii: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class PotentialEval:
    value: float
    gradient: complex  # real gradient (d/dx, d/dy) packed as dx + i dy
    source: DiscreteMeasure = field(repr=False, default=None)


@dataclass(frozen=True)
class CapacityReport:
    estimate: float
    lower: float
    upper: float
    n: int
    method: str
    transfinite: float = float("nan")
    consistent: bool = True

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "lower": self.lower, "upper": self.upper,
                "n": self.n, "method": self.method}


# ---------------------------------------------------------------------------
# boundary discretization


def _cheb_partition(m: int):
    """Breakpoints and node parameters on [0, 1], clustered at both ends."""
    k = np.arange(m + 1)
    s = (1 - np.cos(np.pi * k / m)) / 2
    mid = (1 - np.cos(np.pi * (k[:-1] + 0.5) / m)) / 2
    return s, mid


def _polyline_runs(vertices):
    """Split a closed polygon boundary at sharp corners into open polylines."""
    v = np.asarray(vertices, dtype=complex)
    n = len(v)
    e_in = v - np.roll(v, 1)
    e_out = np.roll(v, -1) - v
    turn = np.abs(np.angle(e_out / e_in))
    corners = np.nonzero(turn > SHARP_TURN)[0]
    if len(corners) == 0:
        return [], np.append(v, v[0])
    runs = []
    for a, b in zip(corners, np.roll(corners, -1)):
        idx = np.arange(a, b + (n if b <= a else 0) + 1) % n
        runs.append(v[idx])
    return runs, None


def _polyline_at(pts: np.ndarray, s: np.ndarray) -> np.ndarray:
    seg = np.abs(np.diff(pts))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    t = s * cum[-1]
    i = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(seg) - 1)
    frac = (t - cum[i]) / np.where(seg[i] > 0, seg[i], 1.0)
    return pts[i] + frac * (pts[i + 1] - pts[i])


def _piece_length(p) -> float:
    if isinstance(p, Disc):
        return 2 * math.pi * p.radius
    if isinstance(p, Segment):
        return p.length
    if isinstance(p, Polygon):
        v = np.asarray(p.vertices)
        return float(np.sum(np.abs(np.roll(v, -1) - v)))
    return 0.0


def _piece_nodes(p, m: int):
    if isinstance(p, Disc):
        t = p.phase + 2 * np.pi * (np.arange(m) + 0.5) / m
        return p.center + p.radius * np.exp(1j * t), np.full(m, 2 * np.pi * p.radius / m)
    if isinstance(p, Segment):
        s, mid = _cheb_partition(m)
        return p.a + mid * (p.b - p.a), np.diff(s) * p.length
    runs, closed = _polyline_runs(p.vertices)
    if closed is not None:
        total = float(np.sum(np.abs(np.diff(closed))))
        s = (np.arange(m) + 0.5) / m
        return _polyline_at(closed, s), np.full(m, total / m)
    lens = np.array([np.sum(np.abs(np.diff(r))) for r in runs])
    counts = _allocate(m, lens, minimum=1)
    zs, ells = [], []
    for r, L, c in zip(runs, lens, counts):
        s, mid = _cheb_partition(c)
        zs.append(_polyline_at(r, mid))
        ells.append(np.diff(s) * L)
    return np.concatenate(zs), np.concatenate(ells)


def _allocate(n: int, lengths, minimum: int = 1) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=float)
    raw = n * lengths / lengths.sum()
    counts = np.maximum(minimum, np.floor(raw).astype(int))
    # hand out the remainder by largest fractional part, ties by index
    short = n - counts.sum()
    if short > 0:
        order = np.lexsort((np.arange(len(raw)), -(raw - np.floor(raw))))
        for i in order[:short]:
            counts[i] += 1
    return counts


def _solid_pieces(K: CompactSet):
    return [p for p in K.pieces if not isinstance(p, Point)]


def boundary_nodes(K: CompactSet, n: int):
    """Nodes and arclength shares on the boundary curves of the non-polar pieces.

    Nodes falling strictly inside another piece are dropped; the equilibrium
    measure lives on the outer boundary.  When overlaps swallow many nodes the
    raw budget is raised (up to 4x) so that about ``n`` survive.
    """
    pieces = _solid_pieces(K)
    if not pieces:
        return np.zeros(0, complex), np.zeros(0)
    raw = n
    for _ in range(3):
        z, ell = _boundary_nodes_raw(K, pieces, raw)
        if len(z) >= 0.9 * n or raw >= 4 * n:
            break
        raw = min(4 * n, int(math.ceil(raw * n / max(1, len(z)))))
    return z, ell


def _boundary_nodes_raw(K, pieces, n):
    lengths = [_piece_length(p) for p in pieces]
    counts = _allocate(max(n, len(pieces)), lengths, minimum=1)
    zs, ells, owner = [], [], []
    for k, (p, m) in enumerate(zip(pieces, counts)):
        z, ell = _piece_nodes(p, int(m))
        zs.append(z)
        ells.append(ell)
        owner.append(np.full(len(z), k))
    z, ell, owner = np.concatenate(zs), np.concatenate(ells), np.concatenate(owner)
    if len(pieces) > 1:
        keep = np.ones(len(z), dtype=bool)
        scale = 1e-9 * (K.bounding_radius + 1.0)
        for k, p in enumerate(pieces):
            if isinstance(p, Segment):
                continue
            inside = _strictly_inside(p, z, scale) & (owner != k)
            keep &= ~inside
        z, ell = z[keep], ell[keep]
        z, ell = _dedupe(z, ell, scale)
    return z, ell


def _strictly_inside(p, z, tol) -> np.ndarray:
    if isinstance(p, Disc):
        return np.abs(z - p.center) < p.radius - tol
    v = p.vertices
    edge = np.min([segment_distance(z, v[i], v[(i + 1) % len(v)]) for i in range(len(v))], axis=0)
    return polygon_contains(z, v, closed=False) & (edge > tol)


def _dedupe(z, ell, tol):
    order = np.lexsort((z.imag, z.real))
    z, ell = z[order], ell[order]
    keep = np.ones(len(z), dtype=bool)
    for i in range(1, len(z)):
        if abs(z[i] - z[i - 1]) <= tol:
            keep[i] = False
            ell[i - 1] += ell[i]
    return z[keep], ell[keep]


# ---------------------------------------------------------------------------
# Leja points and transfinite diameter


def _lex_sorted(z: np.ndarray) -> np.ndarray:
    return z[np.lexsort((z.imag, z.real))]


def leja_points(K: CompactSet, n: int, candidates: int | None = None) -> np.ndarray:
    """Greedy Leja sequence over a fine boundary discretization of K.

    x1 is the lexicographically smallest candidate; each next point maximizes
    the product of distances to the points chosen so far, ties resolved in
    lexicographic order.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if K.is_empty:
        raise EmptySetError("compact set is empty")
    solid = _solid_pieces(K)
    if solid:
        cand, _ = boundary_nodes(K, candidates or max(16 * n, 512))
    else:
        cand = np.array([p.p for p in K.pieces], dtype=complex)
    cand = _lex_sorted(np.unique(cand))
    out = np.empty(n, dtype=complex)
    out[0] = cand[0]
    logprod = np.zeros(len(cand))
    with np.errstate(divide="ignore"):
        for k in range(1, n):
            logprod += np.log(np.abs(cand - out[k - 1]))
            out[k] = cand[int(np.argmax(logprod))]
    return out


def transfinite_diameter(points) -> float:
    """(prod_{i<j} |x_i - x_j|)^(2/(n(n-1))), accumulated in log space."""
    z = np.asarray(points, dtype=complex).ravel()
    n = len(z)
    if n < 2:
        raise ValueError("need at least 2 points")
    d = np.abs(z[:, None] - z[None, :])
    iu = np.triu_indices(n, 1)
    pair = d[iu]
    if np.any(pair == 0):
        return 0.0
    return float(np.exp(np.sum(np.log(pair)) * 2.0 / (n * (n - 1))))


# ---------------------------------------------------------------------------
# equilibrium measure


def energy_matrix(z: np.ndarray, ell: np.ndarray) -> np.ndarray:
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, 1.0)
    A = np.log(d)
    np.fill_diagonal(A, np.log(ell / (2 * np.pi)))
    return A


def _kkt(A: np.ndarray):
    n = len(A)
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = 1.0
    M[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    sol = np.linalg.solve(M, rhs)
    return sol[:n], -sol[n]


def maximize_energy(A: np.ndarray, max_iter: int = 200, tol: float = 1e-10):
    """Maximize w^T A w over the probability simplex by an active-set method.

    Lawson-Hanson style: the iterate stays feasible, a KKT step that would
    make weights negative is cut back at the first weight reaching zero, and
    the most violating inactive node is added once the active problem is
    solved.  The self-energy diagonal can make the kernel indefinite on a
    support, so a node that is dropped right after being added is blocked
    rather than re-added forever.  Returns (weights, energy).  On the
    support the discrete potential A w is constant and equal to the energy.
    """
    n = len(A)
    active = np.ones(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    w = np.full(n, 1.0 / n)
    added = -1
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        wa, lam = _kkt(A[np.ix_(idx, idx)])
        neg = wa < 0
        if neg.any():
            cur = w[idx]
            ratio = np.where(neg, cur / (cur - wa), np.inf)
            first = int(np.argmin(ratio))
            step = cur + ratio[first] * (wa - cur)
            drop = neg & (step <= 1e-15 * max(1.0, float(step.max())))
            drop[first] = True
            if idx[first] == added:
                blocked[added] = True
            step[drop] = 0.0
            w[:] = 0.0
            w[idx] = step / step.sum()
            active[idx[drop]] = False
            added = -1
            continue
        w[:] = 0.0
        w[idx] = wa
        pot = A @ w
        viol = np.where(~active & ~blocked, pot - lam, -np.inf)
        worst = int(np.argmax(viol))
        if viol[worst] <= tol * (1 + abs(lam)):
            return w, float(w @ A @ w)
        active[worst] = True
        added = worst
    resid = float(np.max(np.abs((A @ w)[w > 0] - w @ A @ w))) if w.any() else float("inf")
    raise ConvergenceError("equilibrium weights did not converge", resid, max_iter)


def equilibrium_measure(K: CompactSet, n: int, max_iter: int = 200) -> DiscreteMeasure:
    """Discrete equilibrium measure of K on about ``n`` boundary nodes.

    Point pieces are polar and carry no mass; if K has nothing else the
    energy is -inf and the capacity 0.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if K.is_empty:
        raise EmptySetError("compact set is empty")
    z, ell = boundary_nodes(K, n)
    if len(z) == 0:
        pts = np.array([p.p for p in K.pieces], dtype=complex)
        w = np.full(len(pts), 1.0 / len(pts))
        return DiscreteMeasure(pts, w, float("-inf"), 0.0, "energy_max", np.zeros(len(pts)))
    A = energy_matrix(z, ell)
    w, energy = maximize_energy(A, max_iter=max_iter)
    keep = w > 0
    return DiscreteMeasure(z[keep], w[keep] / w[keep].sum(), energy, math.exp(energy), "energy_max",
                           ell[keep] / (2 * np.pi))


# ---------------------------------------------------------------------------
# potentials


def potential_field(m: DiscreteMeasure, z):
    """Potential sum_i w_i ln|z - x_i| and its real gradient at an array of points.

    The gradient is returned packed as complex ``dp/dx + i dp/dy``.
    """
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    val = np.zeros(flat.shape)
    grad = np.zeros(flat.shape, dtype=complex)
    # chunk so the (points x nodes) temporaries stay small
    step = max(1, 2_000_000 // max(1, m.n))
    for a in range(0, len(flat), step):
        d = flat[a:a + step, None] - m.nodes[None, :]
        r2 = d.real ** 2 + d.imag ** 2
        if np.any(r2 == 0):
            raise ValueError("evaluation point coincides with a measure node")
        val[a:a + step] = 0.5 * np.log(r2) @ m.weights
        grad[a:a + step] = (d / r2) @ m.weights
    return val.reshape(z.shape), grad.reshape(z.shape)


def potential(m: DiscreteMeasure, z: complex) -> PotentialEval:
    v, g = potential_field(m, np.array([complex(z)]))
    return PotentialEval(float(v[0]), complex(g[0]), m)


# ---------------------------------------------------------------------------
# capacity


def capacity(K: CompactSet, budget: int = 64) -> CapacityReport:
    """Bracketed logarithmic capacity of a compact set.

    The estimate is the maximal discrete energy at ``budget`` nodes.  The lower
    bracket subtracts the spread against the half-budget solve plus a small
    relative floor; the upper bracket also covers the Leja transfinite
    diameter (an upper-biased estimator) and the polygonization tolerance.
    """
    if budget < 2:
        raise ValueError("budget must be >= 2")
    if K.is_empty:
        return CapacityReport(0.0, 0.0, 0.0, 0, "empty", 0.0)
    if K.is_polar:
        return CapacityReport(0.0, 0.0, 0.0, 0, "polar", 0.0)
    fine = equilibrium_measure(K, budget)
    coarse = equilibrium_measure(K, max(2, budget // 2))
    est = fine.capacity_estimate
    spread = abs(est - coarse.capacity_estimate) + BRACKET_FLOOR * est
    d = transfinite_diameter(leja_points(K, budget))
    lower = max(0.0, est - spread)
    upper = max(est + spread, d) + K.hausdorff_tol
    # Leja diameters sit above the capacity; a Leja value well below the energy
    # estimate means one of the two discretizations is broken
    consistent = d >= est * (1 - 0.05)
    return CapacityReport(est, lower, upper, fine.n, "energy_max+leja", d, consistent)


def frostman_check(m: DiscreteMeasure, samples) -> dict:
    """Minimum of p(z) - ln cap over samples off K, with a violation flag."""
    samples = np.asarray(samples, dtype=complex).ravel()
    if m.capacity_estimate <= 0 or not np.isfinite(m.energy_estimate):
        return {"degenerate": True, "min_margin": None, "tolerance": None, "violations": 0, "ok": True}
    lncap = math.log(m.capacity_estimate)
    tol = 1e-2 * abs(lncap) + 1e-3
    v, _ = potential_field(m, samples)
    margin = v - lncap
    bad = int(np.sum(margin < -tol))
    return {"degenerate": False, "min_margin": float(margin.min()), "tolerance": tol,
            "violations": bad, "ok": bad == 0}
