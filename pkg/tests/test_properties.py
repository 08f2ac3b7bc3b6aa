import numpy as np
from hypothesis import given, settings, strategies as st

from absorbwave.aperture import Scaled, ShiftClamped, SplitCosh, SqueezeExp, evaluate
from absorbwave.config import RunConfig, parse_config, serialize
from absorbwave.observables import moments
from absorbwave.semiclassics import xi_field
from absorbwave.transmission import (
    HusimiField, ProbeSpec, husimi_points, phi_kernel_closed, phi_kernel_literal, thermal_integrand,
)
from helpers import PURE, SIGMA_V, T, THERMAL, gaussian_field

XT = PURE.x0 + PURE.v0 * T
FAST = settings(max_examples=60, deadline=None)

rates = st.floats(-2000.0, 2000.0, allow_nan=False)
times = st.floats(0.0, T)
offsets_x = st.floats(-4.0, 4.0)
offsets_v = st.floats(-4.0, 4.0)
protocols = st.one_of(
    st.builds(ShiftClamped, rates, st.just(PURE.t0)),
    st.builds(SplitCosh, rates, st.just(PURE.t0)),
    st.builds(SqueezeExp, st.floats(1e-3, 2000.0), st.just(PURE.t0)),
)


@settings(max_examples=300, deadline=None)
@given(protocols, st.lists(times, min_size=1, max_size=20))
def test_aperture_within_unit_interval(protocol, tau):
    chi = evaluate(protocol, np.array(tau))
    assert np.all(np.isfinite(chi)) and np.all((chi >= 0) & (chi <= 1))


@FAST
@given(protocols, offsets_x, offsets_v, st.floats(0.01, 1.0))
def test_pure_husimi_nonnegative_and_quadratic(protocol, dx, dv, c):
    x, v = XT + dx * PURE.sigma, PURE.v0 + dv * SIGMA_V
    h = husimi_points(PURE, protocol, x, v, T)[0]
    hc = husimi_points(PURE, Scaled(protocol, c), x, v, T)[0]
    assert h >= 0
    assert abs(hc - c * c * h) <= 1e-12 * c * c * h + 1e-300


@FAST
@given(protocols, offsets_x, offsets_v)
def test_thermal_husimi_nonnegative(protocol, dx, dv):
    x, v = XT + dx * THERMAL.sigma, THERMAL.v0 + dv * THERMAL.delta_v
    assert husimi_points(THERMAL, protocol, x, v, T, kind="thermal")[0] >= 0


@FAST
@given(offsets_x, offsets_v, times, times)
def test_kernel_hermitian_and_forms_agree(dx, dv, tau, tau_p):
    probe = ProbeSpec.for_packet(THERMAL, XT + dx * THERMAL.sigma, THERMAL.v0 + dv * THERMAL.delta_v)
    g = thermal_integrand(THERMAL, SqueezeExp(120.0, THERMAL.t0), probe, T)
    a, b = g(tau, tau_p), g(tau_p, tau)
    assert abs(a - np.conj(b)) <= 1e-12 * abs(a)
    closed = complex(phi_kernel_closed(THERMAL, probe, T, tau, tau_p))
    literal = complex(phi_kernel_literal(THERMAL, probe, T, tau, tau_p))
    assert abs(closed - literal) <= 1e-10 * abs(literal)


@FAST
@given(st.floats(0.0, 200.0), st.floats(-4.0, 4.0), st.floats(-4.0, 4.0))
def test_exponent_never_exceeds_its_peak_value(gamma, dx, dv):
    x, v = XT + dx * PURE.sigma, PURE.v0 + dv * SIGMA_V
    for g in (gamma, -gamma):
        xi = xi_field(PURE, x, v, T, g)
        assert np.isfinite(xi)
        assert xi <= 2 * g * PURE.t0 + (g * PURE.sigma / PURE.v0) ** 2 + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e6), st.floats(-0.8, 0.8))
def test_moments_scale_invariant(scale, rho):
    x = np.linspace(1e-4, 2e-4, 81)
    v = np.linspace(2.6e-3, 3.4e-3, 81)
    base = gaussian_field(x, v, 1.5e-4, 3e-3, 1e-5, 6e-5, rho)
    a = moments(HusimiField(x, v, base, "pure"))
    b = moments(HusimiField(x, v, scale * base, "pure"))
    np.testing.assert_allclose(a, b, rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from(["free", "shift", "split", "squeeze"]),
    st.floats(0.0, 500.0),
    st.sampled_from(["pure", "thermal"]),
    st.floats(10e-6, 60e-6),
    st.integers(3, 400),
    st.floats(1e-12, 1e-3),
)
def test_config_round_trip(name, gamma, state, sigma, nx, rel_tol):
    cfg = RunConfig().with_values(scenario__name=name, scenario__gamma_per_s=gamma, scenario__state=state,
                                  packet__sigma_m=sigma, grid__nx=nx, quadrature__rel_tol=rel_tol)
    assert parse_config(serialize(cfg)) == cfg
