import json

import pytest

from closedrange.classify import (SCHEMA_VERSION, BergmanParams, MainParams, classify_bergman, classify_main,
                                  params_dict)
from closedrange.geometry import Disc, Scene
from closedrange.scenes import (disc_complement, integer_lattice_points, lattice_discs, lattice_segments, plane,
                                unit_disc)

# reduced ladders keep these unit tests fast; the full defaults run in the acceptance suite
SMALL = MainParams(density=4, samples_per_side=16, boxes=(2.0, 4.0), Lambda=3)


@pytest.fixture(scope="module")
def discs_report():
    return classify_main(lattice_discs(0.1, 1.0), SMALL)


def test_lattice_discs_closed_range(discs_report):
    r = discs_report
    assert r.verdict == "closed_range"
    assert r.condition3.kind == "finite" and r.condition4["pass"]
    assert len(r.condition1_2_evidence) == 2


def test_closed_range_implies_bergman_infinite(discs_report):
    assert classify_bergman(lattice_discs(0.1, 1.0)).dimension == "infinite"


def test_report_schema(discs_report):
    d = discs_report.to_dict()
    assert d["schema_version"] == SCHEMA_VERSION and d["report"] == "main_theorem"
    assert isinstance(d["assumptions"], list) and d["assumptions"]
    json.dumps(d)  # serializable as is


def test_witness_parameters_in_range(discs_report):
    c = discs_report.condition4
    assert c["M"] == discs_report.condition3.R_star
    assert 0 < c["delta"] <= discs_report.condition3.delta_star / 2 and 2 * c["delta"] < c["M"]


def test_lattice_segments_closed_range():
    assert classify_main(lattice_segments(0.5, 1.0), SMALL).verdict == "closed_range"


def test_integer_lattice_not_closed_range():
    r = classify_main(integer_lattice_points(), SMALL)
    assert r.verdict == "not_closed_range" and r.condition4 is None
    assert r.checks["constant_grows"]


@pytest.mark.parametrize("scene", [unit_disc(), disc_complement(), plane()])
def test_unsupported_is_inconclusive(scene):
    r = classify_main(scene, SMALL)
    assert r.verdict == "inconclusive" and r.condition3 is None
    assert any("unsupported" in n for n in r.notes)


def test_polar_never_closed_range():
    for scene in (integer_lattice_points(),):
        assert classify_main(scene, SMALL).verdict != "closed_range"


# -- Bergman ---------------------------------------------------------------------

@pytest.mark.parametrize("scene", [plane(), integer_lattice_points()], ids=["plane", "integer_lattice"])
def test_bergman_zero(scene):
    r = classify_bergman(scene)
    assert r.dimension == "zero" and r.witness is None


def test_bergman_disc_complement():
    r = classify_bergman(disc_complement())
    assert r.dimension == "infinite" and r.witness["pass"] and r.witness["frostman_ok"]
    assert any(row["lower"] > 0 for row in r.cap_complement)
    assert r.to_dict()["report"] == "bergman"


def test_bergman_tiny_far_disc_still_infinite():
    r = classify_bergman(Scene(obstacles=(Disc(30 + 0j, 1e-3),)), BergmanParams(budget=64, samples=32))
    assert r.dimension == "infinite"


def test_params_dict_is_plain():
    d = params_dict(MainParams())
    assert d["boxes"] == [4.0, 8.0, 16.0] and d["escape_rungs"] == [5.0, 20.0, 80.0]
    json.dumps(d)
