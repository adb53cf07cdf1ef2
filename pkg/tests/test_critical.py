"""Critical-point detection, winding multiplicities, clustering."""

import math

import numpy as np
import pytest

from conftest import make_scenario, solved_field
from levelset_lab.critical import (
    cluster_critical_sets,
    find_critical_points,
    find_critical_points_report,
    find_critical_zero_points,
    multiplicity,
    resolve_tolerances,
    separating_network_through,
    winding_on_closed_curve,
)
from levelset_lab.domain import ToleranceSet
from levelset_lab.geometry import TWO_PI
from levelset_lab.solver import SolutionField, solve_scenario


def test_z_plus_inv_two_saddles():
    fld = solved_field("z_plus_inv", 256, 128)
    pts = find_critical_points(fld)
    assert len(pts) == 2
    neg, pos = pts  # sorted by value
    assert (neg.x, neg.y) == pytest.approx((-1.0, 0.0), abs=1e-3)
    assert (pos.x, pos.y) == pytest.approx((1.0, 0.0), abs=1e-3)
    assert neg.value == pytest.approx(-2.0, abs=1e-3)
    assert pos.value == pytest.approx(2.0, abs=1e-3)
    assert [p.multiplicity for p in pts] == [1, 1]
    assert not any(p.is_zero for p in pts)


def test_z2m_four_critical_zero_points():
    fld = solved_field("z2_minus_zm2", 256, 128)
    pts = find_critical_points(fld)
    assert len(pts) == 4
    c = math.sqrt(0.5)
    expected = {(c, c), (-c, c), (-c, -c), (c, -c)}
    for p in pts:
        best = min(expected, key=lambda q: math.hypot(p.x - q[0], p.y - q[1]))
        assert math.hypot(p.x - best[0], p.y - best[1]) <= 1e-3
        assert p.multiplicity == 1
        assert p.is_zero
    zeros = find_critical_zero_points(fld)
    assert sum(p.multiplicity for p in zeros) == 4


def test_gradient_free_log_field_empty():
    fld = solved_field("counterexample1", 128, 64)
    assert find_critical_points(fld) == []


def test_linear_field_on_disk_empty():
    spec = make_scenario("1", None, "x", None, grid=(64, 32), name="linear")
    fld = solve_scenario(spec)
    assert find_critical_points(fld) == []


def test_no_point_inside_margin_band():
    fld = solved_field("z2_minus_zm2", 128, 64)
    rt = resolve_tolerances(fld)
    for p in find_critical_points(fld):
        _, s = fld.domain.invert_point(p.x, p.y)
        assert rt.interior_margin <= float(s) <= 1.0 - rt.interior_margin


# -------------------------------------------------------------- multiplicity

def test_multiplicity_simple_disk_zero():
    fld = solved_field("disk_z2", 128, 64)
    assert multiplicity(fld, (0.0, 0.0)) == 1


def test_multiplicity_two_disk_zero():
    fld = solved_field("disk_z3", 128, 64)
    assert multiplicity(fld, (0.0, 0.0)) == 2
    (p,) = find_critical_points(fld)
    assert p.multiplicity == 2
    assert abs(p.winding_raw + 2.0) <= 0.05


def test_multiplicity_nondegenerate_saddle():
    fld = solved_field("z_plus_inv", 128, 64)
    assert multiplicity(fld, (1.0, 0.0)) == 1


def test_degree_additivity_along_enclosing_curve():
    """A closed curve around two of the four z2m zeros turns the gradient
    by -2 full turns (no circle encloses two points without entering the
    hole, so a polar-rectangle curve is used)."""
    fld = solved_field("z2_minus_zm2", 256, 128)
    # positively oriented polar rectangle around the right-hand pair e^{+-i pi/4}
    n = 400
    r_lo, r_hi, th_hw = 0.6, 1.8, 1.2
    legs = [
        np.stack([np.linspace(r_lo, r_hi, n) * math.cos(-th_hw),
                  np.linspace(r_lo, r_hi, n) * math.sin(-th_hw)], axis=1),
        np.stack([np.full(n, r_hi) * np.cos(np.linspace(-th_hw, th_hw, n)),
                  np.full(n, r_hi) * np.sin(np.linspace(-th_hw, th_hw, n))], axis=1),
        np.stack([np.linspace(r_hi, r_lo, n) * math.cos(th_hw),
                  np.linspace(r_hi, r_lo, n) * math.sin(th_hw)], axis=1),
        np.stack([np.full(n, r_lo) * np.cos(np.linspace(th_hw, -th_hw, n)),
                  np.full(n, r_lo) * np.sin(np.linspace(th_hw, -th_hw, n))], axis=1),
    ]
    curve = np.vstack(legs)
    turns = winding_on_closed_curve(fld, curve[:, 0], curve[:, 1])
    assert turns == pytest.approx(-2.0, abs=0.05)


def test_refinement_stability_of_detection():
    coarse = find_critical_points(solved_field("z2_minus_zm2", 128, 64))
    fine = find_critical_points(solved_field("z2_minus_zm2", 256, 128))
    assert len(coarse) == len(fine) == 4
    cell = 2.0 * solved_field("z2_minus_zm2", 128, 64).median_cell_diag()
    for b in fine:
        d = min(math.hypot(b.x - a.x, b.y - a.y) for a in coarse)
        assert d <= cell
    assert sorted(p.multiplicity for p in coarse) == sorted(p.multiplicity for p in fine)


# ----------------------------------------------------------------- clusters

def test_cluster_single_point():
    fld = solved_field("z_plus_inv", 128, 64)
    pts = [p for p in find_critical_points(fld) if p.value > 0]
    assert cluster_critical_sets(fld, pts, pts[0].value) == 1


def test_cluster_connected_zero_network():
    fld = solved_field("z2_minus_zm2", 128, 64)
    pts = find_critical_points(fld)
    assert cluster_critical_sets(fld, pts, 0.0) == 1


def test_cluster_two_disjoint_loops():
    """Synthetic sampled field: two localized saddle patterns with disjoint
    zero loops in a positive background give q = 2."""
    spec = make_scenario("6", None, "0", None, grid=(128, 64), name="synthetic")
    cx = 3.0

    def f(x, y):
        w1 = np.exp(-((x - cx) ** 2 + y ** 2))
        w2 = np.exp(-((x + cx) ** 2 + y ** 2))
        q1 = ((x - cx) ** 2 - y ** 2) / 4.0
        q2 = ((x + cx) ** 2 - y ** 2) / 4.0
        return w1 * q1 + w2 * q2 + (1.0 - w1 - w2) * 0.5

    fld = SolutionField.from_function(spec, f)
    q = cluster_critical_sets(fld, [(cx, 0.0), (-cx, 0.0)], 0.0,
                              tol=ToleranceSet(value_zero_tol=0.05))
    assert q == 2


def test_separating_network_detection():
    # the zero set of z2m contains the circle r = 1 through all four points
    fld = solved_field("z2_minus_zm2", 128, 64)
    pts = find_critical_points(fld)
    assert separating_network_through(fld, pts, 0.0)
    # the level network at a saddle of z + 1/z does not wind around the hole
    fld2 = solved_field("z_plus_inv", 128, 64)
    pos = [p for p in find_critical_points(fld2) if p.value > 0]
    assert not separating_network_through(fld2, pos, pos[0].value)


def test_detector_is_deterministic():
    a = find_critical_points_report(solved_field("z2_minus_zm2", 128, 64))
    b = find_critical_points_report(solved_field("z2_minus_zm2", 128, 64))
    assert [(p.x, p.y, p.value, p.multiplicity) for p in a[0]] == \
           [(p.x, p.y, p.value, p.multiplicity) for p in b[0]]


def test_cluster_rejects_off_level_points():
    fld = solved_field("z_plus_inv", 128, 64)
    pts = find_critical_points(fld)
    with pytest.raises(ValueError):
        cluster_critical_sets(fld, pts, 1.0)  # points sit at +-2, not at 1


def test_band_too_wide_guard():
    from levelset_lab.errors import BandTooWideError
    spec = make_scenario("2", "1", "1", "0", grid=(64, 32), name="ramp")
    fld = SolutionField.from_function(spec, lambda x, y: np.hypot(x, y))
    probe = [(1.5, 0.0)]
    with pytest.raises(BandTooWideError):
        cluster_critical_sets(fld, probe, 1.5, tol=ToleranceSet(value_zero_tol=1.0,
                                                                equal_extrema_tol=1.0),
                              band=0.45)
