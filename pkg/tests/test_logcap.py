import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from closedrange.geometry import CompactSet, Disc, Point, Polygon, Segment, Similarity
from closedrange.logcap import (DiscreteMeasure, EmptySetError, boundary_nodes, capacity, equilibrium_measure,
                                frostman_check, leja_points, potential, potential_field, transfinite_diameter)

UNIT = CompactSet.from_pieces([Disc(0j, 1.0)])
SEG4 = CompactSet.from_pieces([Segment(-2 + 0j, 2 + 0j)])
SQUARE = CompactSet.from_pieces([Polygon((0j, 1 + 0j, 1 + 1j, 1j))])
# capacity of the unit square, Gamma(1/4)^2 / (4 pi^(3/2))
SQUARE_CAP = math.gamma(0.25) ** 2 / (4 * math.pi ** 1.5)


# -- leja_points ---------------------------------------------------------------

def test_leja_single_point():
    K = CompactSet.from_pieces([Point(0.5 + 0.5j)])
    x = leja_points(K, 2)
    assert x[0] == x[1]
    assert capacity(K).estimate == 0.0


def test_leja_circle_gaps():
    x = leja_points(UNIT, 16)
    assert np.allclose(np.abs(x), 1.0, atol=1e-12)
    ang = np.sort(np.angle(x) % (2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    assert gaps.max() / gaps.min() < 1.5


def test_leja_segment_clusters_at_endpoints():
    x = np.sort(leja_points(SEG4, 8).real)
    # candidates are midpoint nodes, so the extremes sit within one node spacing of the ends
    assert abs(x[0] + 2) < 1e-3 and abs(x[-1] - 2) < 1e-3
    gaps = np.diff(x)
    # arcsine density: gaps near the ends are smaller than in the middle
    assert gaps[0] < gaps[len(gaps) // 2] and gaps[-1] < gaps[len(gaps) // 2]


def test_leja_first_point_lexicographic():
    x = leja_points(SQUARE, 4)
    cand, _ = boundary_nodes(SQUARE, 512)
    first = min(cand, key=lambda z: (z.real, z.imag))
    assert x[0] == first and abs(x[0]) < 1e-3


def test_leja_deterministic():
    assert np.array_equal(leja_points(SQUARE, 32), leja_points(SQUARE, 32))


def test_leja_errors():
    with pytest.raises(ValueError):
        leja_points(UNIT, 1)
    with pytest.raises(EmptySetError):
        leja_points(CompactSet.from_pieces([]), 4)


# -- transfinite_diameter ---------------------------------------------------------

def test_diameter_two_points():
    assert transfinite_diameter([0j, 1 + 0j]) == 1.0


def test_diameter_coincident_points():
    assert transfinite_diameter([0j, 0j, 1j]) == 0.0


def test_diameter_needs_two_points():
    with pytest.raises(ValueError):
        transfinite_diameter([1j])


def test_diameter_circle_roots_of_unity():
    # greedy Leja on the circle yields the 64th roots of unity, d_n = n^(1/(n-1))
    d = transfinite_diameter(leja_points(UNIT, 64))
    assert math.isclose(d, 64 ** (1 / 63), rel_tol=1e-9)


def test_diameter_unit_segment():
    K = CompactSet.from_pieces([Segment(0j, 1 + 0j)])
    d = transfinite_diameter(leja_points(K, 64))
    assert 0.25 <= d <= 0.25 * 1.10


@pytest.mark.parametrize("K", [UNIT, SEG4, SQUARE], ids=["disc", "segment", "square"])
def test_leja_diameter_nonincreasing(K):
    x = leja_points(K, 64)
    d = [transfinite_diameter(x[:n]) for n in range(8, 65)]
    assert np.all(np.diff(d) <= 1e-12)


def test_diameter_log_space_no_underflow():
    x = 1e-3 * np.exp(2j * np.pi * np.arange(400) / 400)
    assert math.isclose(transfinite_diameter(x), 1e-3 * 400 ** (1 / 399), rel_tol=1e-9)


# -- equilibrium_measure --------------------------------------------------------

def test_equilibrium_two_points():
    m = equilibrium_measure(CompactSet.from_pieces([Point(0j), Point(1 + 0j)]), 8)
    assert m.capacity_estimate == 0.0 and m.energy_estimate == -math.inf


def test_equilibrium_unit_disc():
    m = equilibrium_measure(UNIT, 64)
    assert abs(m.capacity_estimate - 1.0) < 0.01
    assert np.allclose(m.weights, 1 / m.n, rtol=1e-6)
    assert math.isclose(m.weights.sum(), 1.0, abs_tol=1e-12)


def test_equilibrium_disc_two_scales_exactly():
    m1 = equilibrium_measure(UNIT, 64)
    m2 = equilibrium_measure(CompactSet.from_pieces([Disc(0j, 2.0)]), 64)
    assert np.allclose(m2.nodes, 2 * m1.nodes, atol=1e-14)
    assert math.isclose(m2.capacity_estimate, 2 * m1.capacity_estimate, rel_tol=1e-12)
    assert abs(m2.capacity_estimate - 2.0) < 0.02


def test_equilibrium_invariants():
    m = equilibrium_measure(SQUARE, 64)
    assert np.all(m.weights >= 0)
    assert math.isclose(m.weights.sum(), 1.0, abs_tol=1e-12)
    assert math.isclose(m.capacity_estimate, math.exp(m.energy_estimate), rel_tol=1e-15)
    assert np.all(SQUARE.contains(m.nodes))


def test_equilibrium_empty():
    with pytest.raises(EmptySetError):
        equilibrium_measure(CompactSet.from_pieces([]), 8)


# -- potential ---------------------------------------------------------------

def test_potential_point_mass():
    m = DiscreteMeasure(np.array([0j]), np.array([1.0]), -math.inf, 0.0)
    p = potential(m, complex(math.e, 0))
    assert math.isclose(p.value, 1.0, rel_tol=1e-15)
    assert abs(p.gradient - 1 / math.e) < 1e-15


def test_potential_on_node():
    m = DiscreteMeasure(np.array([0j]), np.array([1.0]), -math.inf, 0.0)
    with pytest.raises(ValueError):
        potential(m, 0j)


@pytest.mark.parametrize("z, tol", [(2 + 0j, 1e-2), (10 + 0j, 1e-3)])
def test_potential_outside_unit_disc(z, tol):
    m = equilibrium_measure(UNIT, 64)
    assert abs(potential(m, z).value - math.log(abs(z))) < tol


def test_potential_far_field():
    m = equilibrium_measure(SQUARE, 64)
    z = np.array([50 + 0j, 1e3j, -1e4 + 1e4j])
    v, _ = potential_field(m, z)
    err = np.abs(v - np.log(np.abs(z)))
    assert np.all(np.diff(err) < 0) and err[-1] < 1e-4


def test_potential_gradient_matches_finite_difference():
    m = equilibrium_measure(SQUARE, 32)
    z, e = 2.0 + 1.3j, 1e-6
    v, g = potential_field(m, np.array([z + e, z - e, z + 1j * e, z - 1j * e, z]))
    fd = complex((v[0] - v[1]) / (2 * e), (v[2] - v[3]) / (2 * e))
    assert abs(fd - g[4]) < 1e-8


# -- capacity -----------------------------------------------------------------

def test_capacity_empty():
    r = capacity(CompactSet.from_pieces([]))
    assert (r.estimate, r.lower, r.upper) == (0.0, 0.0, 0.0)


def test_capacity_disc_03():
    r = capacity(CompactSet.from_pieces([Disc(0.4 - 0.2j, 0.3)]))
    assert abs(r.estimate - 0.3) < 0.003
    assert r.lower <= 0.3 <= r.upper


def test_capacity_disc_plus_far_point():
    a = capacity(UNIT)
    b = capacity(CompactSet.from_pieces([Disc(0j, 1.0), Point(7 + 3j)]))
    assert abs(b.estimate - a.estimate) < 1e-10
    assert abs(b.lower - a.lower) < 0.01 and abs(b.upper - a.upper) < 0.01


@pytest.mark.parametrize("K, exact", [(UNIT, 1.0), (SEG4, 1.0), (SQUARE, SQUARE_CAP)],
                         ids=["disc", "segment", "square"])
def test_capacity_brackets_contain_exact(K, exact):
    r = capacity(K)
    assert r.lower <= exact <= r.upper
    assert abs(r.estimate - exact) / exact < 0.01
    assert r.consistent


def test_capacity_cross():
    # cap of a symmetric cross with arms 1 is 2^(-1/2)
    K = CompactSet.from_pieces([Segment(-1 + 0j, 1 + 0j), Segment(-1j, 1j)])
    assert abs(capacity(K, 128).estimate - 2 ** -0.5) < 0.01


def test_capacity_report_json_shape():
    d = capacity(UNIT).to_dict()
    assert set(d) == {"estimate", "lower", "upper", "n", "method"}


def test_capacity_budget_check():
    with pytest.raises(ValueError):
        capacity(UNIT, 1)


# -- frostman_check ----------------------------------------------------------

def test_frostman_unit_disc_circle_two():
    m = equilibrium_measure(UNIT, 64)
    r = frostman_check(m, 2 * np.exp(2j * np.pi * np.arange(50) / 50))
    assert r["ok"] and abs(r["min_margin"] - math.log(2)) < 1e-2


def test_frostman_segment_near_endpoint():
    m = equilibrium_measure(SEG4, 64)
    r = frostman_check(m, np.array([2.01 + 0j, -2.001 + 0.001j, 0.3j]))
    assert r["ok"] and r["min_margin"] >= -r["tolerance"]


def test_frostman_point_mass_degenerate():
    m = equilibrium_measure(CompactSet.from_pieces([Point(0j)]), 4)
    assert frostman_check(m, np.array([1 + 0j]))["degenerate"]


# -- properties ---------------------------------------------------------------

@pytest.mark.parametrize("K", [UNIT, SEG4, SQUARE], ids=["disc", "segment", "square"])
@pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
def test_capacity_scaling(K, r):
    a = capacity(K)
    b = capacity(K.transformed(Similarity(scale=r)))
    width = (a.upper - a.lower) * r + (b.upper - b.lower)
    assert abs(b.estimate - r * a.estimate) <= width


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.floats(-math.pi, math.pi))
def test_capacity_rigid_invariance(shift, angle):
    K = CompactSet.from_pieces([Segment(-1 + 0j, 1 + 0.5j), Disc(2 + 0j, 0.3)])
    a = capacity(K, 32).estimate
    b = capacity(K.transformed(Similarity(shift, angle)), 32).estimate
    assert abs(a - b) < 1e-10


@given(st.floats(0.1, 1.0), st.floats(0.0, 1.0))
def test_capacity_monotone(r1, dr):
    K1 = CompactSet.from_pieces([Disc(0j, r1)])
    K2 = CompactSet.from_pieces([Disc(0j, r1 + dr), Segment(0j, 2.5 + 0j)])
    a, b = capacity(K1, 32), capacity(K2, 32)
    assert a.upper >= a.lower
    assert b.lower >= a.lower - (a.upper - a.lower)


@pytest.mark.parametrize("K", [UNIT, SEG4, SQUARE,
                               CompactSet.from_pieces([Disc(0j, 0.5), Segment(1 + 0j, 2 + 1j)])],
                         ids=["disc", "segment", "square", "mixed"])
def test_energy_below_diameter(K):
    r = capacity(K)
    assert r.estimate <= r.transfinite + (r.upper - r.lower)


def test_boundary_nodes_drop_covered_nodes():
    K = CompactSet.from_pieces([Disc(0j, 1.0), Disc(0.5 + 0j, 1.0)])
    z, ell = boundary_nodes(K, 64)
    assert len(z) >= 0.9 * 64
    # every surviving node lies on the outer boundary of the union
    assert np.all((np.abs(z) >= 1 - 1e-9) & (np.abs(z - 0.5) >= 1 - 1e-9))
    assert np.all(ell > 0)


def test_active_set_does_not_cycle():
    # a clip of many small discs where a violating node re-enters with negative weight
    from closedrange.geometry import clip_complement, transform
    from closedrange.scenes import lattice_discs
    scene = transform(lattice_discs(0.1, 1.0), Similarity(scale=2.0))
    K = clip_complement(scene, 0.25 + 0.75j, 8.0)
    r = capacity(K, 4 * len(K.pieces))
    assert r.lower <= r.estimate <= r.upper and r.consistent
