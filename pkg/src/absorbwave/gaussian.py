"""Closed-form free evolution of a Gaussian packet.

All functions broadcast over numpy arrays. Time arguments may be negative:
the probe packets of the Husimi overlap are evaluated at tau - t < 0.
"""

from __future__ import annotations

import numpy as np

from absorbwave.physics import HBAR, WavePacketSpec


def evolved_width(alpha0, mass, tau):
    """alpha_tau = alpha0 / (1 + 2 i hbar alpha0 tau / m)."""
    return alpha0 / (1.0 + 2j * HBAR * alpha0 * np.asarray(tau, dtype=float) / mass)


def alpha_tau(spec: WavePacketSpec, tau):
    return evolved_width(spec.alpha0, spec.mass, tau)


def classical_position(spec: WavePacketSpec, tau):
    return spec.x0 + spec.v0 * np.asarray(tau, dtype=float)


def global_phase(spec: WavePacketSpec, tau):
    tau = np.asarray(tau, dtype=float)
    return (spec.mass * spec.v0**2 * tau / (2.0 * HBAR)
            - 0.5 * np.arctan(2.0 * HBAR * spec.alpha0 * tau / spec.mass))


def free_propagator(mass, tau, xi):
    """Free-particle propagator K_0^(tau)(xi) [1/m].

    The square root of 1/i is taken as exp(-i pi/4) for tau > 0 and its
    conjugate for tau < 0.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau == 0):
        raise ValueError("free propagator is a delta function at tau = 0")
    amp = np.sqrt(mass / (2.0 * np.pi * HBAR * np.abs(tau))) * np.exp(-0.25j * np.pi * np.sign(tau))
    return amp * np.exp(1j * mass * np.asarray(xi, dtype=float) ** 2 / (2.0 * HBAR * tau))


def gaussian_at_origin(alpha0, mass, center, v, tau):
    """Value at x = 0 of a Gaussian (width alpha0, centre ``center``, velocity ``v``)
    after free flight for time ``tau``.

    Uses the form where the velocity appears only polynomially in the exponent:
    (2 a^2/(pi alpha0))^(1/4) exp(-i m tau a v^2/(2 hbar alpha0) - i m x0 a v/(hbar alpha0) - a x0^2)
    with a = alpha_tau.
    """
    a = evolved_width(alpha0, mass, tau)
    tau = np.asarray(tau, dtype=float)
    pref = np.power(2.0 * a**2 / (np.pi * alpha0), 0.25)
    k = mass / (HBAR * alpha0)
    return pref * np.exp(-0.5j * k * tau * a * v**2 - 1j * k * center * a * v - a * center**2)


def gaussian_at_origin_expanded(alpha0, mass, center, v, tau):
    """Same quantity written directly from the moving Gaussian, before simplification."""
    a = evolved_width(alpha0, mass, tau)
    tau = np.asarray(tau, dtype=float)
    xt = center + v * tau
    pref = np.power(2.0 * a**2 / (np.pi * alpha0), 0.25)
    return pref * np.exp(-a * xt**2 - 1j * mass * v * xt / HBAR + 0.5j * mass * v**2 * tau / HBAR)


def psi_at_barrier(spec: WavePacketSpec, v, tau):
    """Freely evolved packet evaluated at the barrier, psi^(tau)_{alpha0, x0, v}(0).

    ``v`` overrides the packet's mean velocity (needed for the thermal average).
    """
    return gaussian_at_origin(spec.alpha0, spec.mass, spec.x0, v, tau)


def psi_initial(spec: WavePacketSpec, x):
    x = np.asarray(x, dtype=float)
    a0 = spec.alpha0
    return (2.0 * a0 / np.pi) ** 0.25 * np.exp(-a0 * (x - spec.x0) ** 2 + 1j * spec.mass * spec.v0 * (x - spec.x0) / HBAR)


def psi_free(spec: WavePacketSpec, x, tau):
    """Free flight e^{i phi_tau} psi^(0)_{alpha_tau, x_tau, v0}(x), normalised with Re(alpha_tau)."""
    x = np.asarray(x, dtype=float)
    a = alpha_tau(spec, tau)
    xt = classical_position(spec, tau)
    return (np.exp(1j * global_phase(spec, tau)) * (2.0 * a.real / np.pi) ** 0.25
            * np.exp(-a * (x - xt) ** 2 + 1j * spec.mass * spec.v0 * (x - xt) / HBAR))
