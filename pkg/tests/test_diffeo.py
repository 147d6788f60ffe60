from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.polynomial import Chebyshev

from gaprenorm import diffeo
from gaprenorm.diffeo import Diffeo
from gaprenorm.errors import AccuracyError, DegenerateIntervalError, DomainError, QuadratureError

GRID = np.linspace(0.0, 1.0, 512)


def test_identity_nonlinearity_is_zero():
    d = Diffeo.identity(16)
    assert d.is_identity
    assert diffeo.nonlinearity_eval(d, 0.37) == 0.0
    value, derivative = diffeo.diffeo_eval(d, 0.37)
    assert float(value) == 0.37
    assert float(derivative) == 1.0


def test_constant_and_linear_nonlinearity():
    assert diffeo.nonlinearity_eval(Diffeo.constant(0.7, 8), 0.2) == pytest.approx(0.7, abs=1e-15)
    linear = Diffeo.from_function(lambda x: x, m=4)
    assert diffeo.nonlinearity_eval(linear, 0.5) == pytest.approx(0.5, abs=1e-14)


def test_nonlinearity_eval_rejects_points_outside_unit_interval():
    with pytest.raises(DomainError):
        diffeo.nonlinearity_eval(Diffeo.constant(1.0, 4), 1.5)
    with pytest.raises(DomainError):
        Diffeo.constant(1.0, 4)(-0.1)


@pytest.mark.parametrize("c", [-1.5, 0.3, 2.0])
def test_constant_nonlinearity_closed_form(c):
    d = Diffeo.constant(c, 16)
    x = np.linspace(0.0, 1.0, 33)
    value, derivative = diffeo.diffeo_eval(d, x)
    assert np.max(np.abs(value - np.expm1(c * x) / math.expm1(c))) <= 1e-13
    assert np.max(np.abs(derivative - c * np.exp(c * x) / math.expm1(c))) <= 1e-12


def test_endpoints_are_pinned(make_diffeo):
    for _ in range(20):
        d = make_diffeo()
        assert d.value(0.0) == 0.0
        assert d.value(1.0) == 1.0
        assert d.cached_norm_integral > 0.0


def test_round_trip_through_the_derivative(make_diffeo):
    fine = np.linspace(0.0, 1.0, 1000)
    for _ in range(200):
        d = make_diffeo(16, 2.0)
        recovered = Diffeo.from_map(d.derivative, 16)
        assert np.max(np.abs(recovered.nonlinearity(GRID) - d.nonlinearity(GRID))) <= 1e-10
        assert np.all(np.diff(d.value(fine)) > 0.0)


def test_log_derivative_integrates_nonlinearity(make_diffeo):
    d = make_diffeo(8, 1.0)
    H = Chebyshev(d.coeffs, domain=[0, 1]).integ(lbnd=0.0)
    expected = H(GRID) - H(0.0) - math.log(d.cached_norm_integral)
    assert np.max(np.abs(d.log_derivative(GRID) - expected)) <= 1e-13


def test_unresolved_exponential_raises_quadrature_error():
    with pytest.raises(QuadratureError):
        Diffeo.constant(650.0, 4)


def test_resized_only_drops_zero_tails():
    d = Diffeo([0.1, 0.2, 0.0, 0.0])
    assert d.resized(2).m == 2
    assert d.resized(6).m == 6
    with pytest.raises(DomainError):
        d.resized(1)


# composition


def test_compose_with_identity_is_neutral(make_diffeo):
    d = make_diffeo(16, 1.0)
    identity = Diffeo.identity(16)
    assert np.max(np.abs(diffeo.compose(identity, d).coeffs - d.coeffs)) <= 1e-12
    assert np.max(np.abs(diffeo.compose(d, identity).coeffs - d.coeffs)) <= 1e-12


def test_compose_constant_nonlinearities():
    psi = Diffeo.constant(1.0, 16)
    phi = Diffeo.constant(1.0, 16)
    result = diffeo.compose(psi, phi)
    expected = 1.0 * phi.derivative(GRID) + 1.0
    assert np.max(np.abs(result.nonlinearity(GRID) - expected)) <= 1e-8
    assert np.max(np.abs(result.value(GRID) - psi.value(phi.value(GRID)))) <= 1e-8


def test_chain_rule_on_random_pairs(make_diffeo):
    for _ in range(200):
        psi = make_diffeo(16, 1.0)
        phi = make_diffeo(16, 1.0)
        result = diffeo.compose(psi, phi)
        chain = psi.nonlinearity(phi.value(GRID)) * phi.derivative(GRID) + phi.nonlinearity(GRID)
        assert np.max(np.abs(result.nonlinearity(GRID) - chain)) <= 1e-8


def test_compose_with_fixed_dimension_reports_unresolved_fit():
    psi = Diffeo.constant(1.5, 4)
    phi = Diffeo([0.0, 1.5, 0.0, 0.0])
    with pytest.raises(AccuracyError):
        diffeo.compose(psi, phi, m=4)


def test_fit_nonlinearity_needs_enough_coefficients():
    with pytest.raises(AccuracyError):
        diffeo.fit_nonlinearity(lambda x: np.exp(10.0 * x), 4)


# zoom


def test_zoom_identity_and_full_interval(make_diffeo):
    identity = Diffeo.identity(8)
    assert diffeo.zoom(identity, (0.2, 0.3)) is identity
    d = make_diffeo(8, 1.0)
    assert diffeo.zoom(d, (0.0, 1.0)) is d


def test_zoom_of_constant_nonlinearity():
    zoomed = diffeo.zoom(Diffeo.constant(1.0, 8), (0.0, 0.5))
    assert np.max(np.abs(zoomed.nonlinearity(GRID) - 0.5)) <= 1e-14


def test_zoom_identity_on_random_intervals(make_diffeo, rng):
    for _ in range(200):
        d = make_diffeo(16, 1.0)
        a, b = np.sort(rng.uniform(0.0, 1.0, 2))
        if b - a < 1e-3:
            continue
        zoomed = diffeo.zoom(d, (a, b))
        width = b - a
        expected = width * d.nonlinearity(a + width * GRID)
        assert np.max(np.abs(zoomed.nonlinearity(GRID) - expected)) <= 1e-9
        restricted = (d.value(a + width * GRID) - d.value(a)) / (d.value(b) - d.value(a))
        assert np.max(np.abs(zoomed.value(GRID) - restricted)) <= 1e-9


def test_zoom_rejects_bad_intervals():
    d = Diffeo.constant(1.0, 4)
    with pytest.raises(DegenerateIntervalError):
        diffeo.zoom(d, (0.3, 0.3 + 1e-14))
    with pytest.raises(DomainError):
        diffeo.zoom(d, (-0.1, 0.5))


# evaluation derivative


def test_evaluation_derivative_vanishes_at_endpoints(make_diffeo):
    d = make_diffeo(8, 1.0)
    delta = np.array([1.0, -0.5, 0.25])
    assert diffeo.evaluation_derivative(d, 0.0, delta) == 0.0
    assert diffeo.evaluation_derivative(d, 1.0, delta) == 0.0


def test_evaluation_derivative_of_identity_under_constant_perturbation():
    identity = Diffeo.identity(8)
    for x in (0.1, 0.5, 0.8):
        assert diffeo.evaluation_derivative(identity, x, [1.0]) == pytest.approx(-x * (1 - x) / 2, abs=1e-14)


def test_evaluation_derivative_matches_finite_differences(make_diffeo, rng):
    h = 1e-4
    for _ in range(20):
        d = make_diffeo(8, 1.0)
        delta = rng.standard_normal(8) / 8
        x = float(rng.uniform())
        plus = Diffeo(d.coeffs + h * delta).value(x)
        minus = Diffeo(d.coeffs - h * delta).value(x)
        fd = (plus - minus) / (2 * h)
        assert abs(diffeo.evaluation_derivative(d, x, delta) - fd) <= 1e-6


def test_evaluation_derivative_sandwich_for_near_identity(make_diffeo):
    grid = np.linspace(0.0, 1.0, 101)
    for _ in range(50):
        d = make_diffeo(8, 0.04)
        assert np.max(np.abs(d.nonlinearity(grid) * d.derivative(grid))) < 0.05
        for x in grid:
            phi = float(d.value(x))
            bound = min(phi, 1.0 - phi)
            value = abs(diffeo.evaluation_derivative(d, x, [1.0]))
            assert bound / 8 - 1e-15 <= value <= 2 * bound + 1e-15


# zoom endpoints


def test_zoom_endpoint_derivative_closed_forms():
    interval = (0.2, 0.7)
    assert diffeo.zoom_endpoint_derivative(Diffeo.identity(4), interval, "left", 0.3) == 0.0
    c = 0.6
    d = Diffeo.constant(c, 4)
    assert float(diffeo.zoom_endpoint_derivative(d, interval, "left", 0.3)) == pytest.approx(-c, abs=1e-14)
    assert float(diffeo.zoom_endpoint_derivative(d, interval, "right", 0.3)) == pytest.approx(c, abs=1e-14)


def test_zoom_endpoint_derivative_matches_finite_differences(make_diffeo):
    d = make_diffeo(8, 1.0)
    a, b, x, h = 0.2, 0.7, 0.35, 1e-6
    fd_left = (diffeo.zoom(d, (a + h, b)).nonlinearity(x) - diffeo.zoom(d, (a - h, b)).nonlinearity(x)) / (2 * h)
    fd_right = (diffeo.zoom(d, (a, b + h)).nonlinearity(x) - diffeo.zoom(d, (a, b - h)).nonlinearity(x)) / (2 * h)
    assert float(diffeo.zoom_endpoint_derivative(d, (a, b), "left", x)) == pytest.approx(fd_left, abs=1e-6)
    assert float(diffeo.zoom_endpoint_derivative(d, (a, b), "right", x)) == pytest.approx(fd_right, abs=1e-6)


# norms


def test_norms_of_identity_and_constant():
    report = diffeo.norms(Diffeo.identity(8))
    assert report.c0_nonlinearity == report.c1_nonlinearity == report.c0_dist_identity == 0.0
    assert np.all(diffeo.schwarzian_eval(Diffeo.identity(8), GRID) == 0.0)

    c = -0.8
    d = Diffeo.constant(c, 8)
    report = diffeo.norms(d)
    assert report.c0_nonlinearity == pytest.approx(abs(c), abs=1e-15)
    assert report.c1_nonlinearity >= report.c0_nonlinearity
    assert np.max(np.abs(diffeo.schwarzian_eval(d, GRID) + c * c / 2)) <= 1e-14


def test_mobius_map_has_zero_schwarzian():
    # phi(x) = 2x/(1+x)
    d = Diffeo.from_function(lambda x: -2.0 / (1.0 + x), m=16)
    assert np.max(np.abs(diffeo.schwarzian_eval(d, GRID))) <= 1e-8
    assert np.max(np.abs(d.value(GRID) - 2 * GRID / (1 + GRID))) <= 1e-10


def test_mirror_and_distortion(make_diffeo):
    d = make_diffeo(8, 1.0)
    m = diffeo.mirror(d)
    assert np.max(np.abs(m.value(GRID) - (1.0 - d.value(1.0 - GRID)))) <= 1e-12
    assert np.max(np.abs(diffeo.mirror(m).coeffs - d.coeffs)) == 0.0
    assert 0.0 <= diffeo.distortion(d) <= diffeo.norms(d).c0_nonlinearity + 1e-12
