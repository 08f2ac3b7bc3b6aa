"""Acceptance gate: one test per criterion, each printing a pass/fail line in the summary."""

import numpy as np

from absorbwave.aperture import Free, Scaled, ShiftClamped, SqueezeExp
from absorbwave.observables import modality, refine_peak, transmission_probability
from absorbwave.physics import HBAR, paper_window, regime_report
from absorbwave.quadrature import QuadratureConfig, integrate_1d
from absorbwave.semiclassics import shift, xi_derivatives
from absorbwave.transmission import (
    ProbeSpec, husimi_points, overlap_integrand, phi_kernel_bruteforce, phi_kernel_closed, thermal_integrand,
)
from helpers import PURE, SIGMA_V, T, THERMAL, field, report

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


def test_criterion_01_reduced_de_broglie_wavelength():
    lam = regime_report(PURE, paper_window()).lambdabar
    record(1, abs(lam - 244e-9) <= 1e-9, f"lambdabar = {lam * 1e9:.3f} nm (244 +/- 1)")


def test_criterion_02_free_identity():
    f = field("free", 0.0, "pure")
    i, j = np.unravel_index(np.argmax(f.values), f.values.shape)
    cell_x = f.x_grid[1] - f.x_grid[0]
    cell_v = f.v_grid[1] - f.v_grid[0]
    ok_peak = abs(f.x_grid[i] - 0.15e-3) <= cell_x and abs(f.v_grid[j] - 3e-3) <= cell_v
    trans, _ = transmission_probability(f)
    ok = ok_peak and abs(trans - 1.0) <= 0.01
    record(2, ok, f"argmax ({f.x_grid[i] * 1e3:.5f} mm, {f.v_grid[j] * 1e3:.5f} mm/s), transmission {trans:.6f}")


def test_criterion_03_shift_law():
    parts, ok = [], True
    for g in (50.0, -50.0, 100.0, -100.0):
        f = field("shift", g, "pure")
        px, _ = refine_peak(f)
        found = px - (PURE.x0 + PURE.v0 * T)
        want = shift(PURE, g)
        tol = max(f.x_grid[1] - f.x_grid[0], 0.1 * abs(want))
        ok &= abs(found - want) <= tol
        parts.append(f"g={g:+.0f}: {found * 1e6:+.2f} um vs {want * 1e6:+.2f}")
    record(3, ok, "; ".join(parts))


def test_criterion_04_closed_kernel_matches_velocity_quadrature():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    xt = THERMAL.x0 + THERMAL.v0 * T
    for _ in range(200):
        tau, tau_p = rng.uniform(0.0, T, 2)
        probe = ProbeSpec.for_packet(THERMAL, xt + rng.uniform(-4, 4) * THERMAL.sigma,
                                     THERMAL.v0 + rng.uniform(-3, 3) * THERMAL.delta_v)
        closed = complex(phi_kernel_closed(THERMAL, probe, T, tau, tau_p))
        brute = phi_kernel_bruteforce(THERMAL, probe, T, tau, tau_p)
        worst = max(worst, abs(closed - brute) / abs(brute))
    record(4, worst <= 1e-8, f"max relative difference {worst:.2e} over 200 draws (<= 1e-8)")


def test_criterion_05_small_velocity_spread_limit():
    spec = THERMAL.with_delta_v(1e-7)
    rng = np.random.default_rng(7)
    xs = PURE.x0 + PURE.v0 * T + rng.uniform(-2, 2, 20) * PURE.sigma
    vs = PURE.v0 + rng.uniform(-2, 2, 20) * SIGMA_V
    worst = 0.0
    for prot in (Free(), ShiftClamped(100.0, PURE.t0)):
        th = husimi_points(spec, prot, xs, vs, T, kind="thermal")
        pu = husimi_points(PURE, prot, xs, vs, T, kind="pure")
        worst = max(worst, float(np.max(np.abs(th - pu) / pu)))
    record(5, worst <= 1e-3, f"max relative difference {worst:.2e} at 20 points (<= 1e-3)")


def test_criterion_06_saddle_identities():
    parts, ok = [], True
    scale = np.array([PURE.sigma, SIGMA_V])
    target_det = (PURE.mass / HBAR) ** 2
    for g in (0.0, 100.0, -100.0):
        x = PURE.x0 + PURE.v0 * T + shift(PURE, g)
        grad, hess = xi_derivatives(PURE, x, PURE.v0, T, g)
        g_nat = np.max(np.abs(grad * scale))  # curvature is of order one in these units
        curv = np.min(np.abs(np.diag(hess) * scale ** 2))
        det_err = abs(np.linalg.det(hess) / target_det - 1)
        xx_err = abs(hess[0, 0] / (-2 * PURE.alpha0) - 1)
        ok &= g_nat <= 1e-6 * curv and det_err <= 1e-6 and xx_err <= 1e-6
        parts.append(f"g={g:+.0f}: |grad| {g_nat:.1e}, det {det_err:.1e}, xx {xx_err:.1e}")
    record(6, ok, "; ".join(parts))


def test_criterion_07_squeeze_numbers():
    r0 = report("squeeze", 0.0)
    r1 = report("squeeze", 150.0)
    dx = 1 - r1.disp_x / r0.disp_x
    dv = r1.disp_v / r0.disp_v - 1
    ok = (abs(r0.uncertainty - 3.12) <= 0.05 and abs(r1.uncertainty - 2.66) <= 0.08
          and dx > 0.20 and dv < 0.10)
    record(7, ok, f"U(0) = {r0.uncertainty:.4f} hbar (3.12 +/- 0.05), U(150) = {r1.uncertainty:.4f} hbar "
                  f"(2.66 +/- 0.08), disp_x -{dx:.1%} (> 20%), disp_v +{dv:.1%} (< 10%)")


def test_criterion_08_split_modality():
    m125 = modality(field("split", 125.0))
    m225 = modality(field("split", 225.0))
    record(8, m125 == 1 and m225 == 2, f"modes at 125: {m125} (want 1), at 225: {m225} (want 2)")


def test_criterion_09_thermal_velocity_shift_sign():
    parts, ok = [], True
    for g in (100.0, -100.0):
        d = report("shift", g).mean_v - THERMAL.v0
        ok &= np.sign(d) == np.sign(g)
        parts.append(f"g={g:+.0f}: mean_v - v0 = {d:+.3e} m/s")
    record(9, ok, "; ".join(parts) + " (want sign of gamma)")


def test_criterion_10_property_suites():
    rng = np.random.default_rng(99)
    fails = []
    xt = PURE.x0 + PURE.v0 * T
    # quadratic law in chi -> c chi, pure and thermal
    base = SqueezeExp(120.0, PURE.t0)
    xs = xt + rng.uniform(-3, 3, 6) * PURE.sigma
    vs = PURE.v0 + rng.uniform(-3, 3, 6) * SIGMA_V
    for spec, kind in ((PURE, "pure"), (THERMAL, "thermal")):
        h1 = husimi_points(spec, base, xs, vs, T, kind=kind)
        for c in rng.uniform(0.05, 1.0, 3):
            hc = husimi_points(spec, Scaled(base, c), xs, vs, T, kind=kind)
            if np.max(np.abs(hc - c * c * h1) / (c * c * h1)) > 1e-12:
                fails.append(f"c^2 law ({kind})")
    # nonnegativity on the paper grids
    for name, g in (("squeeze", 150.0), ("split", 225.0), ("shift", 100.0)):
        if np.min(field(name, g).values) < 0:
            fails.append(f"negative {name}")
    # hermitian kernel g(tau, tau') = conj g(tau', tau)
    probe = ProbeSpec.for_packet(THERMAL, xt, THERMAL.v0)
    gk = thermal_integrand(THERMAL, base, probe, T)
    a, b = rng.uniform(0, T, 50), rng.uniform(0, T, 50)
    if np.max(np.abs(gk(a, b) - np.conj(gk(b, a))) / np.abs(gk(a, b))) > 1e-12:
        fails.append("hermitian")
    # a converged integral changes by less than rel_tol when the nodes are doubled
    cfg = QuadratureConfig()
    integrands = [lambda s: np.exp(1j * 300.0 * s) * np.exp(-((s - 0.05) / 0.01) ** 2)]
    for _ in range(3):
        pr = ProbeSpec.for_packet(PURE, xt + rng.uniform(-2, 2) * PURE.sigma, PURE.v0 + rng.uniform(-2, 2) * SIGMA_V)
        integrands.append(overlap_integrand(PURE, ShiftClamped(rng.uniform(-150, 150), PURE.t0), pr, T))
    for f in integrands:
        r1 = integrate_1d(f, 0.0, T, cfg)
        r2 = integrate_1d(f, 0.0, T, cfg.doubled())
        if r1.error_estimate > cfg.rel_tol or abs(r1.value - r2.value) > cfg.rel_tol * abs(r2.value):
            fails.append("node doubling")
    record(10, not fails, "all properties hold" if not fails else "failed: " + ", ".join(fails))
