from __future__ import annotations

import numpy as np
import pytest

from gaprenorm import gapmap, renorm
from gaprenorm.diffeo import Diffeo
from gaprenorm.errors import IterationCapError, MalformedInputError, NotRenormalizableError
from gaprenorm.gapmap import Sign, affine_gap_map, build_gap_map
from gaprenorm.renorm import Combinatorics, renormalize, renormalize_n
from gaprenorm.search import deep_map


def _smooth(b: float) -> gapmap.GapMap:
    phi_L = Diffeo([0.1, -0.05, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0])
    phi_R = Diffeo([-0.08, 0.04, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    return build_gap_map(0.5, 0.5, b, phi_L, phi_R)


# combinatorics


def test_combinatorics_parse_and_format():
    gamma = Combinatorics.parse(" (-,1) (-, 2)(+,1)")
    assert gamma.entries == ((Sign.MINUS, 1), (Sign.MINUS, 2), (Sign.PLUS, 1))
    assert str(gamma) == "(-,1)(-,2)(+,1)"
    assert len(gamma) == 3
    assert gamma[1] == (Sign.MINUS, 2)
    assert str(gamma[:2]) == "(-,1)(-,2)"
    assert Combinatorics.parse("") == Combinatorics()
    assert str(Combinatorics.repeat(Sign.PLUS, 3, 2)) == "(+,3)(+,3)"


@pytest.mark.parametrize("text", ["(x,1)", "(-,0)", "(-,1)junk", "-,1"])
def test_combinatorics_parse_rejects_bad_text(text):
    with pytest.raises(MalformedInputError):
        Combinatorics.parse(text)


# gap itinerary


def test_gap_itinerary_of_affine_example(affine_example):
    it = renorm.gap_itinerary(affine_example)
    assert (it.k, it.sigma) == (1, Sign.MINUS)
    assert it.margin == pytest.approx(0.025)
    assert it.gap_width == pytest.approx(0.5)
    assert renorm.find_k(affine_example) == 1


def test_gap_closure_at_the_first_iterate():
    with pytest.raises(NotRenormalizableError) as err:
        renorm.gap_itinerary(affine_gap_map(0.5, 0.5, 0.4, m=4))
    assert (err.value.reason, err.value.iterate, err.value.side) == ("closure", 0, None)
    assert err.value.exit_code == 4


def test_gap_touching_zero_is_a_boundary_block():
    with pytest.raises(NotRenormalizableError) as err:
        renorm.gap_itinerary(affine_gap_map(0.5, 0.5, 1.0 / 3.0, m=4))
    assert (err.value.reason, err.value.iterate) == ("boundary", 0)


def test_iteration_cap_is_reported():
    # the gap orbit needs more left iterates than allowed
    f = affine_gap_map(0.5, 0.5, 0.05, m=4)
    with pytest.raises(IterationCapError) as err:
        renorm.gap_itinerary(f, k_cap=1)
    assert err.value.side == "-"


# return maps


def test_return_words():
    assert renorm.return_words(2, Sign.MINUS) == ("LRLL", "RLL")
    assert renorm.return_words(2, Sign.PLUS) == ("LRR", "RLRR")


def test_affine_return_map(affine_example):
    R = renorm.return_map(affine_example)
    assert R.I_prime == (pytest.approx(-0.05), pytest.approx(0.025))
    assert R.left(-0.05) == pytest.approx(0.01875, abs=1e-15)
    assert R.right(0.025) == pytest.approx(-0.04375, abs=1e-15)
    assert R.left(0.0) == pytest.approx(0.025, abs=1e-15)
    assert R.right(0.0) == pytest.approx(-0.05, abs=1e-15)


@pytest.mark.parametrize("b", np.linspace(0.295, 0.325, 10))
@pytest.mark.parametrize("smooth", [False, True], ids=["affine", "smooth"])
def test_return_map_agrees_with_direct_iteration(b, smooth):
    f = _smooth(b) if smooth else affine_gap_map(0.5, 0.5, b, m=8)
    R = renorm.return_map(f)
    l, r = R.I_prime
    tol = 1e-8 if smooth else 1e-10
    for x in np.linspace(l, r, 101):
        if x == 0.0:
            continue
        if x < 0.0:
            assert abs(float(R.left(x)) - renorm.iterate_direct(f, x, R.k + 2)) <= tol
        else:
            assert abs(float(R.right(x)) - renorm.iterate_direct(f, x, R.k + 1)) <= tol


def test_push_jet_carries_chain_rule(smooth_example):
    word = "LRL"
    x = np.linspace(-0.05, -1e-3, 7)
    y, d, n = renorm.push_jet(smooth_example, word, x)
    h = 1e-6
    fd = (renorm.push(smooth_example, word, x + h) - renorm.push(smooth_example, word, x - h)) / (2 * h)
    assert np.max(np.abs(y - renorm.push(smooth_example, word, x))) == 0.0
    assert np.max(np.abs(d - fd)) <= 1e-8
    _, d_plus, _ = renorm.push_jet(smooth_example, word, x + h)
    _, d_minus, _ = renorm.push_jet(smooth_example, word, x - h)
    log_fd = (np.log(d_plus) - np.log(d_minus)) / (2 * h)
    assert np.max(np.abs(n - log_fd)) <= 1e-6


# renormalization


def test_renormalize_affine_example(affine_example):
    step = renormalize(affine_example)
    g = step.renormalized
    assert (step.k, step.sigma) == (1, Sign.MINUS)
    assert step.I_prime == (pytest.approx(-0.05, abs=1e-15), pytest.approx(0.025, abs=1e-15))
    assert g.b == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert g.alpha == pytest.approx(0.125, abs=1e-12)
    assert g.beta == pytest.approx(0.25, abs=1e-12)
    assert g.is_affine
    assert g.m == affine_example.m


def test_renormalize_mirror_affine_example():
    step = renormalize(affine_gap_map(0.5, 0.5, 0.7, m=8))
    g = step.renormalized
    assert step.sigma is Sign.PLUS
    assert step.I_prime == (pytest.approx(-0.025, abs=1e-15), pytest.approx(0.05, abs=1e-15))
    assert g.b == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert g.alpha == pytest.approx(0.25, abs=1e-12)
    assert g.beta == pytest.approx(0.125, abs=1e-12)


def test_renormalization_commutes_with_mirror(smooth_example):
    g1 = renormalize(gapmap.mirror(smooth_example)).renormalized
    g2 = gapmap.mirror(renormalize(smooth_example).renormalized)
    assert g1.alpha == pytest.approx(g2.alpha, abs=1e-10)
    assert g1.beta == pytest.approx(g2.beta, abs=1e-10)
    assert g1.b == pytest.approx(g2.b, abs=1e-10)
    assert np.max(np.abs(g1.phi_L.coeffs - g2.phi_L.coeffs)) <= 1e-9
    assert np.max(np.abs(g1.phi_R.coeffs - g2.phi_R.coeffs)) <= 1e-9


def test_renormalized_branches_are_rescaled_return_branches(smooth_example):
    step = renormalize(smooth_example)
    g = step.renormalized
    R = renorm.return_map(smooth_example)
    s = step.I_prime_len
    x = np.linspace(g.b - 1.0, -1e-3, 40)
    assert np.max(np.abs(g.left_branch(x) - R.left(s * x) / s)) <= 1e-8
    x = np.linspace(1e-3, g.b, 40)
    assert np.max(np.abs(g.right_branch(x) - R.right(s * x) / s)) <= 1e-8


def test_literal_coordinates_agree(smooth_example):
    geo = renorm.renormalized_coordinates(smooth_example)
    alpha, beta = renorm.literal_coordinates(smooth_example, geo)
    assert alpha == pytest.approx(geo.alpha, abs=1e-9)
    assert beta == pytest.approx(geo.beta, abs=1e-9)


def test_renormalize_n_stops_at_the_first_block(affine_example):
    trajectory = renormalize_n(affine_example, 2)
    steps, gamma = trajectory
    assert len(steps) == 1
    assert str(gamma) == "(-,1)"
    assert trajectory.blocked.depth == 2
    assert trajectory.blocked.reason == "closure"
    assert trajectory.blocked.iterate == 0


def test_not_renormalizable_map_has_empty_trajectory():
    trajectory = renormalize_n(affine_gap_map(0.5, 0.5, 0.4, m=4), 1)
    assert trajectory.steps == []
    assert str(trajectory.gamma) == ""
    assert trajectory.blocked.depth == 1


def test_affine_distance(affine_example):
    assert renorm.affine_distance(affine_example) == 0.0
    f = build_gap_map(0.5, 0.5, 0.3, Diffeo.constant(0.2, 4), Diffeo.identity(4))
    assert renorm.affine_distance(f) >= 0.2


def test_intervals_are_nested(deep_affine):
    trajectory = renormalize_n(deep_affine.maps[4], 3)
    assert trajectory.depth == 3
    intervals = trajectory.nested_intervals()
    for (l0, r0), (l1, r1) in zip(intervals, intervals[1:]):
        assert l0 < l1 < 0.0 < r1 < r0


@pytest.mark.slow
def test_moderate_nonlinearity_converges_to_affine():
    phi_L = Diffeo([0.0, 0.3] + [0.0] * 14)
    phi_R = Diffeo([0.0, -0.3] + [0.0] * 14)
    target = Combinatorics.repeat(Sign.MINUS, 1, 4)
    result = deep_map(0.7, 0.7, phi_L, phi_R, target, 4, m=16)
    distances = [renorm.affine_distance(g) for g in result.maps]
    assert distances[4] <= 0.1 * distances[0]
    assert distances[4] <= distances[3]


@pytest.mark.slow
def test_small_nonlinearity_converges_to_affine_at_depth_eight():
    phi_L = Diffeo([0.0, 0.005] + [0.0] * 6)
    phi_R = Diffeo([0.0, -0.005] + [0.0] * 6)
    target = Combinatorics.repeat(Sign.MINUS, 1, 8)
    result = deep_map(0.99, 0.99, phi_L, phi_R, target, 8, m=8)
    assert str(result.gamma) == str(target)
    distances = [renorm.affine_distance(g) for g in result.maps]
    assert distances[8] <= 0.1 * distances[0]
    for before, after in zip(distances[3:], distances[4:]):
        assert after <= before * (1.0 + 1e-9) + 1e-15
