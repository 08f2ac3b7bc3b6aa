import numpy as np
import pytest

from absorbwave.aperture import Exponential
from absorbwave.observables import transmission_probability
from absorbwave.physics import HBAR
from absorbwave.semiclassics import (
    SaddleCoefficients, gamma_bound, predicted_shift, saddle_coefficients, saddle_interval, semiclassical_field,
    semiclassical_husimi, shift, xi_derivatives, xi_field,
)
from absorbwave.transmission import ProbeSpec, husimi_points
from helpers import PURE, SIGMA_V, T, field

XT = PURE.x0 + PURE.v0 * T


def test_coefficients_at_free_flight_point():
    c = saddle_coefficients(PURE, ProbeSpec.for_packet(PURE, XT, PURE.v0), T)
    assert c.V_I == 0.0
    assert c.V_R == pytest.approx(4 * PURE.alpha0 * PURE.x0 * PURE.v0, rel=1e-14)
    assert c.U == pytest.approx(1.0e4, rel=1e-12)
    assert c.W == pytest.approx(4 * PURE.alpha0 * PURE.x0 ** 2, rel=1e-14)
    with pytest.raises(ValueError):
        SaddleCoefficients(0.0, 1.0, 1.0, 1.0)


@pytest.mark.parametrize("gamma", [0.0, 50.0, 100.0, -100.0])
def test_exponent_at_shifted_peak(gamma):
    xi = xi_field(PURE, XT + shift(PURE, gamma), PURE.v0, T, gamma)
    assert xi == pytest.approx(2 * gamma * PURE.t0 + (gamma * PURE.sigma / PURE.v0) ** 2, abs=1e-10)


def test_prefactor_at_zero_rate_and_free_peak():
    probe = ProbeSpec.for_packet(PURE, XT, PURE.v0)
    assert semiclassical_husimi(PURE, probe, T, 1.0, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert semiclassical_husimi(PURE, probe, T, 0.5, 0.0, simplified=True) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("gamma", [100.0, -100.0, 50.0])
def test_saddle_form_tracks_numerics_near_peak(gamma):
    chi0 = np.exp(-max(gamma, 0.0) * T)
    prot = Exponential(chi0, gamma)
    xs = XT + shift(PURE, gamma) + np.array([0.0, -1.0, 1.0, 0.0, 0.5]) * PURE.sigma
    vs = PURE.v0 + np.array([0.0, 0.0, 0.0, 1.0, -0.5]) * SIGMA_V
    num = husimi_points(PURE, prot, xs, vs, T)
    for simplified in (False, True):
        ratio = semiclassical_field(PURE, xs, vs, T, chi0, gamma, simplified) / num
        assert np.all(np.abs(ratio - 1) < 0.10)
    # at the peak itself the two agree far better than the bound
    assert semiclassical_field(PURE, xs[0], vs[0], T, chi0, gamma) / num[0] == pytest.approx(1.0, abs=2e-3)


def test_shift_law_antisymmetric():
    assert shift(PURE, 100.0) == pytest.approx(-30e-6, rel=1e-12)
    assert shift(PURE, -100.0) == pytest.approx(30e-6, rel=1e-12)
    for g in (13.0, 77.0, 150.0):
        assert shift(PURE, -g) == -shift(PURE, g)
    assert shift(PURE, 100.0) == pytest.approx(-100.0 / (2 * PURE.alpha0 * PURE.v0), rel=1e-14)


def test_predicted_shift_fields():
    p = predicted_shift(PURE, 100.0, T)
    assert p.delta_x == shift(PURE, 100.0)
    assert p.peak == (pytest.approx(XT - 30e-6), PURE.v0)
    assert p.transmission_estimate == pytest.approx(np.exp(-5.0), rel=1e-12)
    assert p.peak_estimate == pytest.approx(np.exp(-4.0), rel=1e-12)
    assert p.warnings == []
    assert p.as_dict()["peak"]["v_tilde"] == PURE.v0


@pytest.mark.parametrize("gamma, rtol", [(25.0, 0.01), (100.0, 0.01), (-100.0, 0.01)])
def test_transmission_follows_corrected_estimate(gamma, rtol):
    """Pure transmission matches chi(t0)^2 exp((gamma sigma / v0)^2); the bare chi(t0)^2 misses it by that factor."""
    trans, _ = transmission_probability(field("shift", gamma, "pure"))
    p = predicted_shift(PURE, gamma, T)
    assert trans == pytest.approx(p.peak_estimate, rel=rtol)
    assert trans / p.transmission_estimate == pytest.approx(np.exp((gamma * PURE.sigma / PURE.v0) ** 2), rel=rtol)
    if abs(gamma) <= 25:
        assert trans == pytest.approx(p.transmission_estimate, rel=0.25)


def test_saddle_interval_and_warnings():
    lo, hi = saddle_interval(PURE, 100.0)
    assert 0 < lo < hi < T
    assert (lo + hi) / 2 == pytest.approx(PURE.t0 + 100.0 * PURE.sigma ** 2 / (2 * PURE.v0 ** 2))
    assert gamma_bound(PURE) == pytest.approx(1000.0, rel=1e-12)
    assert any("gamma" in w for w in predicted_shift(PURE, 300.0, T).warnings)
    assert any("interval" in w for w in predicted_shift(PURE, 100.0, 0.055).warnings)


def test_hessian_against_analytic_xx_and_determinant():
    for g in (0.0, 60.0):
        x = XT + shift(PURE, g)
        grad, hess = xi_derivatives(PURE, x, PURE.v0, T, g)
        assert hess[0, 0] == pytest.approx(-2 * PURE.alpha0, rel=1e-8)
        assert np.linalg.det(hess) == pytest.approx((PURE.mass / HBAR) ** 2, rel=1e-8)
        assert abs(grad[0]) * PURE.sigma < 1e-8
