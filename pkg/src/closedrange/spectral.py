"""Dirichlet Laplacian eigenvalues, harmonic extension and discrete identity checks on grids.

All operators are the 5-point finite-difference Laplacian on the interior
nodes of a :class:`GridDomain`, with homogeneous Dirichlet data at every
masked-out node.  Eigen- and harmonic solves use a sparse LU factorization;
the eigenvalue is computed by ARPACK in shift-invert mode about 0, which is
inverse iteration accelerated by a Krylov subspace.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import CompactSet, GridDomain, Scene, Segment, rasterize
from .logcap import DiscreteMeasure, capacity, potential_field

J01 = 2.404825557695773  # first zero of the Bessel function J_0
LAMBDA_DISC = J01 ** 2
DENSE_LIMIT = 400


class EmptyDomainError(ValueError):
    pass


class SupportError(ValueError):
    pass


class SpectralConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e}, {iterations} iterations)")


class ReducedOrderWarning(UserWarning):
    """Richardson extrapolation applied where the h^2 error model does not hold."""


@dataclass(frozen=True, eq=False)
class SpectralResult:
    lambda1: float
    eigvector: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    h: float
    richardson: float | None = None
    h_list: tuple = ()
    grid: GridDomain | None = field(default=None, repr=False)

    @property
    def best(self) -> float:
        return self.richardson if self.richardson is not None else self.lambda1

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "richardson": self.richardson,
                "h_list": list(self.h_list or (self.h,)), "residual": self.residual,
                "iterations": self.iterations}


@dataclass(frozen=True)
class ClosedRangeEstimate:
    constant: float
    lambda1_source: SpectralResult = field(repr=False)
    verdict: str = "closed_range"


# ---------------------------------------------------------------------------
# operators


def interior_index(g: GridDomain) -> np.ndarray:
    """Map grid node -> interior unknown number, -1 off the interior."""
    idx = np.full(g.shape, -1, dtype=np.int64)
    idx[g.interior_mask] = np.arange(g.n_interior)
    return idx


def laplacian(g: GridDomain) -> sp.csr_matrix:
    """Positive 5-point Dirichlet Laplacian (-Delta_h) on the interior nodes."""
    n = g.n_interior
    if n == 0:
        raise EmptyDomainError("grid has no interior nodes")
    idx = interior_index(g)
    rows, cols = [np.arange(n)], [np.arange(n)]
    vals = [np.full(n, 4.0)]
    for a, b in (((slice(1, None), slice(None)), (slice(None, -1), slice(None))),
                 ((slice(None), slice(1, None)), (slice(None), slice(None, -1)))):
        p, q = idx[a], idx[b]
        both = (p >= 0) & (q >= 0)
        p, q = p[both], q[both]
        rows += [p, q]
        cols += [q, p]
        vals += [np.full(len(p), -1.0)] * 2
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return (A.tocsr() / g.h ** 2).tocsr()


def _to_grid(g: GridDomain, v: np.ndarray, fill=0.0) -> np.ndarray:
    out = np.full(g.shape, fill, dtype=v.dtype)
    out[g.interior_mask] = v
    return out


# ---------------------------------------------------------------------------
# eigenvalues


def lambda1(g: GridDomain, tol: float = 1e-8, max_iter: int = 200) -> SpectralResult:
    """Smallest eigenvalue of the 5-point Dirichlet Laplacian on ``g``.

    The start vector is all-ones on the interior, so the result is
    deterministic.  The eigenvector is L^2-normalized (h^2 sum v^2 = 1) and
    sign-normalized so that its largest-magnitude entry is positive.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    A = laplacian(g)
    n = A.shape[0]
    if n <= DENSE_LIMIT:
        w, V = np.linalg.eigh(A.toarray())
        lam, v, iters = float(w[0]), V[:, 0], 1
    else:
        solve = spla.factorized(A.tocsc())
        calls = [0]

        def opinv(x):
            calls[0] += 1
            return solve(np.asarray(x).ravel())

        op = spla.LinearOperator((n, n), matvec=opinv, dtype=float)
        try:
            w, V = spla.eigsh(A, k=1, sigma=0.0, which="LM", OPinv=op, v0=np.ones(n),
                              tol=min(tol, 1e-10) * 1e-2, maxiter=max_iter * n)
        except spla.ArpackNoConvergence as e:
            raise SpectralConvergenceError("ARPACK did not converge", float("nan"), calls[0]) from e
        lam, v, iters = float(w[0]), V[:, 0], calls[0]
    if abs(v.min()) > abs(v.max()):
        v = -v
    v = v / (math.sqrt(float(v @ v)) * g.h)
    residual = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v))
    if residual > tol * max(1.0, lam):
        raise SpectralConvergenceError("eigen-residual above tolerance", residual, iters)
    return SpectralResult(lam, _to_grid(g, v), iters, residual, g.h, None, (g.h,), g)


def richardson(lam_coarse: float, lam_fine: float, h_coarse: float, h_fine: float, order: int = 2) -> float:
    """Eliminate the leading h^order error term from two grid values."""
    r = (h_coarse / h_fine) ** order
    return lam_fine + (lam_fine - lam_coarse) / (r - 1)


def lambda1_richardson(scene: Scene, box, hs=(1 / 32, 1 / 64), tol: float = 1e-8) -> SpectralResult:
    """lambda1 on the finest of two grids, with the h^2-extrapolated value attached.

    Slit (segment) obstacles create r^(1/2) tip singularities that degrade
    the 5-point error to roughly O(h); a :class:`ReducedOrderWarning` is
    issued then, though the extrapolated value is still reported.
    """
    h_coarse, h_fine = sorted((float(h) for h in hs), reverse=True)
    coarse = lambda1(rasterize(scene, box, h_coarse), tol)
    fine = lambda1(rasterize(scene, box, h_fine), tol)
    if _has_slits(scene, box):
        warnings.warn("slit obstacles present: Richardson assumes O(h^2) but the error is closer to O(h)",
                      ReducedOrderWarning, stacklevel=2)
    ext = richardson(coarse.lambda1, fine.lambda1, h_coarse, h_fine)
    return SpectralResult(fine.lambda1, fine.eigvector, coarse.iterations + fine.iterations,
                          fine.residual, h_fine, ext, (h_coarse, h_fine), fine.grid)


def _has_slits(scene: Scene, box) -> bool:
    xmin, xmax, ymin, ymax = map(float, box)
    c = complex((xmin + xmax) / 2, (ymin + ymax) / 2)
    return any(isinstance(ob, Segment) for ob in scene.obstacles_near(c, abs(complex(xmax, ymax) - c)))


def closed_range_constant(s: SpectralResult) -> ClosedRangeEstimate:
    """The closed-range constant 2/sqrt(lambda1), preferring the extrapolated value."""
    lam = s.best
    if not lam > 0:
        raise ValueError("lambda1 must be > 0")
    return ClosedRangeEstimate(2.0 / math.sqrt(lam), s, "closed_range")


# ---------------------------------------------------------------------------
# Rayleigh quotients


def _interior_values(g: GridDomain, psi) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.shape != g.shape:
        raise ValueError(f"field shape {psi.shape} does not match grid {g.shape}")
    off = psi[~g.interior_mask]
    if off.size and np.max(np.abs(off)) > 0:
        raise ValueError("field must vanish on masked-out nodes")
    return psi[g.interior_mask]


def rayleigh_quotients(g: GridDomain, psi) -> tuple[float, float]:
    """(Dirichlet-form quotient, ||Delta psi|| / ||psi||) for a field vanishing off the interior."""
    v = _interior_values(g, psi)
    nv = float(np.vdot(v, v).real)
    if nv == 0:
        raise ValueError("zero field")
    A = laplacian(g)
    Av = A @ v
    form = float(np.vdot(v, Av).real) / nv
    strong = float(np.linalg.norm(Av)) / math.sqrt(nv)
    return form, strong


def rayleigh_upper(g: GridDomain, psi) -> float:
    """Upper bound for lambda1(g): the smaller of the two discrete Rayleigh quotients."""
    return min(rayleigh_quotients(g, psi))


# ---------------------------------------------------------------------------
# harmonic extension


def harmonic_extension(g: GridDomain, boundary, tol: float = 1e-10) -> np.ndarray:
    """Discrete harmonic field on the interior with the given values on every other node.

    ``boundary`` is a full grid field; only its values off the interior mask
    are read.  The returned field keeps those values and fills the interior.
    """
    b = np.asarray(boundary, dtype=float)
    if b.shape != g.shape:
        raise ValueError(f"field shape {b.shape} does not match grid {g.shape}")
    A = laplacian(g)
    rhs = np.zeros(g.n_interior)
    mask = g.interior_mask
    ext = np.where(mask, 0.0, b)
    idx = interior_index(g)
    # every interior node sits strictly inside the box, so all four neighbours exist
    for di, dk in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb = np.roll(np.roll(ext, -di, axis=0), -dk, axis=1)
        rhs += nb[mask]
    rhs /= g.h ** 2
    u = spla.spsolve(A.tocsc(), rhs)
    res = float(np.linalg.norm(A @ u - rhs) / max(1e-300, np.linalg.norm(rhs)))
    if not np.all(np.isfinite(u)) or res > tol:
        raise SpectralConvergenceError("harmonic solve failed", res, 1)
    out = b.copy()
    out[idx >= 0] = u
    return out


# ---------------------------------------------------------------------------
# integration by parts


@dataclass(frozen=True)
class DbarReport:
    grad_sq: float
    four_dz_sq: float
    mismatch: float
    h: float


def dbar_identity_check(g: GridDomain, phi) -> DbarReport:
    """Compare ||grad phi||^2 with 4 ||phi_z||^2 for a field supported inside the mask.

    The left side is the 5-point Dirichlet form (forward differences), the
    right side uses central differences with phi_z = (phi_x - i phi_y)/2.
    Both discretize the same continuum integral, so the relative mismatch
    is a pure O(h^2) discretization error.
    """
    phi = np.asarray(phi)
    if phi.shape != g.shape:
        raise ValueError(f"field shape {phi.shape} does not match grid {g.shape}")
    # the field must vanish within 2 nodes of every masked-out node
    bad = ~g.interior_mask
    near = bad.copy()
    for _ in range(2):
        grown = near.copy()
        grown[1:, :] |= near[:-1, :]
        grown[:-1, :] |= near[1:, :]
        grown[:, 1:] |= near[:, :-1]
        grown[:, :-1] |= near[:, 1:]
        near = grown
    if np.any(phi[near] != 0):
        raise SupportError("field support reaches within 2 nodes of the domain boundary")
    h = g.h
    grad_sq = float(np.sum(np.abs(np.diff(phi, axis=0)) ** 2) + np.sum(np.abs(np.diff(phi, axis=1)) ** 2))
    px = (phi[2:, 1:-1] - phi[:-2, 1:-1]) / (2 * h)
    py = (phi[1:-1, 2:] - phi[1:-1, :-2]) / (2 * h)
    four_dz_sq = float(np.sum(np.abs(px - 1j * py) ** 2) * h * h)
    scale = max(grad_sq, four_dz_sq)
    mismatch = abs(grad_sq - four_dz_sq) / scale if scale > 0 else 0.0
    return DbarReport(grad_sq, four_dz_sq, mismatch, h)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class StabilityRow:
    index: int
    capacity: float
    lambda1: float
    gap: float  # relative distance to the reference eigenvalue


@dataclass(frozen=True)
class StabilityTable:
    rows: tuple
    reference: float
    decreasing: bool
    converged: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "capacity", "lambda1", "gap"])
        for r in self.rows:
            w.writerow([r.index, repr(r.capacity), repr(r.lambda1), repr(r.gap)])
        return buf.getvalue()


def eigenvalue_stability_experiment(base: Scene, shrinking, h: float, box=None, reference: float | None = None,
                                    gap_tol: float = 0.02, cap_threshold: float = 1e-3,
                                    budget: int = 64) -> StabilityTable:
    """lambda1 of base minus K_j along a sequence of shrinking compacts.

    Each value is Richardson-extrapolated from spacings 2h and h.  The table
    is flagged ``decreasing`` when lambda1 strictly decreases and the gap to
    the reference shrinks, and ``converged`` when in addition the last gap is
    below ``gap_tol`` with the last capacity below ``cap_threshold``.  The
    reference defaults to the same computation on ``base`` itself.
    """
    if box is None:
        c, r = base.base_disc.center, base.base_disc.radius
        box = (c.real - r - h, c.real + r + h, c.imag - r - h, c.imag + r + h)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReducedOrderWarning)
        if reference is None:
            reference = lambda1_richardson(base, box, (2 * h, h)).best
        rows = []
        for j, K in enumerate(shrinking):
            if not isinstance(K, CompactSet):
                K = CompactSet.from_pieces(K)
            cap = capacity(K, budget).estimate
            lam = lambda1_richardson(base.with_obstacles(K.pieces), box, (2 * h, h)).best
            rows.append(StabilityRow(j, cap, lam, abs(lam - reference) / reference))
    lams = [r.lambda1 for r in rows]
    gaps = [r.gap for r in rows]
    decreasing = len(rows) > 1 and all(b < a for a, b in zip(lams, lams[1:])) and \
        all(b < a for a, b in zip(gaps, gaps[1:]))
    converged = bool(rows) and (decreasing or len(rows) == 1) and rows[-1].gap < gap_tol \
        and rows[-1].capacity < cap_threshold
    return StabilityTable(tuple(rows), reference, decreasing, converged)


def log_reference_integral(h: float, R: float = 2.0) -> float:
    """Midpoint-rule value of the integral of ln(R/|z|) over D(0, R) (exactly pi R^2 / 2)."""
    n = int(round(2 * R / h))
    t = -R + h * (np.arange(n) + 0.5)
    x, y = np.meshgrid(t, t, indexing="ij")
    r = np.hypot(x, y)
    inside = r < R
    return float(np.sum(np.log(R / r[inside])) * h * h)


@dataclass(frozen=True)
class MajorantReport:
    J: float
    integral: float
    bound: float
    min_value: float
    positive: bool
    within_bound: bool


def majorant_integral_check(m: DiscreteMeasure, g: GridDomain, slack: float = 0.02) -> MajorantReport:
    """Area integral of g(z) = (1/J) sum w_i ln(2/|z - x_i|) over the grid interior, J = ln 2 - I(m).

    For supp(m) in the closed unit disc the integrand is positive on D(0,1)
    and the integral is at most 2 pi / J.
    """
    J = math.log(2.0) - m.energy_estimate
    if not J > 0:
        raise ValueError(f"J = ln 2 - I(m) = {J} must be > 0")
    z = g.coords()[g.interior_mask]
    p, _ = potential_field(m, z)
    vals = (math.log(2.0) - p) / J
    integral = float(np.sum(vals) * g.h ** 2)
    bound = 2 * math.pi / J
    mn = float(vals.min()) if len(vals) else float("nan")
    return MajorantReport(J, integral, bound, mn, bool(mn > 0), integral <= bound * (1 + slack))
