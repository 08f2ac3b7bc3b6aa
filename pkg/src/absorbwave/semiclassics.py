"""Steepest-descent approximation for the exponential aperture chi0 * exp(gamma * tau).

With the frozen-Gaussian time integral done by a saddle point, the pure Husimi
distribution becomes an explicit Gaussian in (x_tilde, v_tilde) controlled by
four coefficients U, V_R, V_I, W. It serves as an analytic cross-check of the
numerical transmission pipeline.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from absorbwave.aperture import Protocol, ShiftClamped, evaluate
from absorbwave.physics import HBAR, MUCH_LESS, WavePacketSpec, at_most
from absorbwave.transmission import ProbeSpec

# finite-difference steps relative to the natural phase-space scales
FD_STEP = 1e-4


@dataclass(frozen=True)
class SaddleCoefficients:
    U: float  # 1/s^2
    V_R: float  # 1/s
    V_I: float  # 1/s
    W: float  # dimensionless

    def __post_init__(self):
        if not self.U > 0:
            raise ValueError(f"U must be positive, got {self.U}")
        if self.W < 0:
            raise ValueError(f"W must be non-negative, got {self.W}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ShiftPrediction:
    delta_x: float
    peak: tuple[float, float]
    transmission_estimate: float
    # chi_{t0}^2 exp((gamma sigma / v0)^2): the saddle exponent at the peak, kept beyond leading order
    peak_estimate: float
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["peak"] = {"x_tilde": self.peak[0], "v_tilde": self.peak[1]}
        return d


def _coefficients(spec: WavePacketSpec, x_tilde, v_tilde, t):
    a0 = spec.alpha0
    lag = x_tilde - v_tilde * t
    U = a0 * (v_tilde ** 2 + spec.v0 ** 2)
    V_R = 2.0 * a0 * (lag * v_tilde + spec.x0 * spec.v0)
    V_I = spec.mass * (v_tilde ** 2 - spec.v0 ** 2) / (2.0 * HBAR)
    W = 2.0 * a0 * (lag ** 2 + spec.x0 ** 2)
    return U, V_R, V_I, W


def saddle_coefficients(spec: WavePacketSpec, probe: ProbeSpec, t: float) -> SaddleCoefficients:
    U, V_R, V_I, W = _coefficients(spec, probe.x_tilde, probe.v_tilde, t)
    return SaddleCoefficients(float(U), float(V_R), float(V_I), float(W))


def xi_field(spec: WavePacketSpec, x_tilde, v_tilde, t: float, gamma: float):
    """Exponent Xi on arrays of probe centres (broadcasts)."""
    U, V_R, V_I, W = _coefficients(spec, np.asarray(x_tilde, float), np.asarray(v_tilde, float), t)
    return ((V_R - gamma) ** 2 - V_I ** 2) / (2.0 * U) - W


def xi_exponent(spec: WavePacketSpec, probe: ProbeSpec, t: float, gamma: float) -> float:
    return float(xi_field(spec, probe.x_tilde, probe.v_tilde, t, gamma))


def semiclassical_field(spec: WavePacketSpec, x_tilde, v_tilde, t: float, chi0: float, gamma: float,
                        simplified: bool = False):
    """Saddle-point Husimi on arrays; ``simplified`` drops the velocity prefactor."""
    x_tilde = np.asarray(x_tilde, float)
    v_tilde = np.asarray(v_tilde, float)
    xi = xi_field(spec, x_tilde, v_tilde, t, gamma)
    if simplified:
        return chi0 ** 2 * np.exp(xi)
    U = spec.alpha0 * (v_tilde ** 2 + spec.v0 ** 2)
    return chi0 ** 2 * spec.alpha0 * (v_tilde + spec.v0) ** 2 / (2.0 * U) * np.exp(xi)


def semiclassical_husimi(spec: WavePacketSpec, probe: ProbeSpec, t: float, chi0: float, gamma: float,
                         simplified: bool = False) -> float:
    return float(semiclassical_field(spec, probe.x_tilde, probe.v_tilde, t, chi0, gamma, simplified))


def shift(spec: WavePacketSpec, gamma: float) -> float:
    """Peak displacement -gamma sigma^2 / v0 (equivalently -gamma / (2 alpha0 v0))."""
    return -gamma * spec.sigma ** 2 / spec.v0


def saddle_time(spec: WavePacketSpec, gamma: float) -> float:
    """Dominant barrier-crossing time t0 + gamma sigma^2 / (2 v0^2)."""
    return spec.t0 + gamma * spec.sigma ** 2 / (2.0 * spec.v0 ** 2)


def saddle_interval(spec: WavePacketSpec, gamma: float) -> tuple[float, float]:
    tc = saddle_time(spec, gamma)
    half = spec.sigma / spec.v0
    return tc - half, tc + half


def gamma_bound(spec: WavePacketSpec) -> float:
    return 2.0 * abs(spec.x0) * spec.v0 / spec.sigma ** 2


def predicted_shift(spec: WavePacketSpec, gamma: float, t: float, protocol: Protocol | None = None) -> ShiftPrediction:
    """Predicted peak of the transmitted Husimi distribution and the transmitted fraction.

    ``protocol`` defaults to the clamped shift aperture for this gamma; the
    transmission estimate is chi(t0)^2 of that protocol.
    """
    warnings = []
    bound = gamma_bound(spec)
    if not at_most(abs(gamma), bound / MUCH_LESS):
        warnings.append(f"|gamma| = {abs(gamma):g} 1/s is not much smaller than {bound:g} 1/s; "
                        "the shift law may be inaccurate")
    lo, hi = saddle_interval(spec, gamma)
    if not (0.0 < lo and hi < t):
        warnings.append(f"saddle interval [{lo:g}, {hi:g}] s is not inside (0, {t:g}) s")
    if protocol is None:
        protocol = ShiftClamped(gamma, spec.t0)
    chi_t0 = float(evaluate(protocol, spec.t0))
    dx = shift(spec, gamma)
    est = chi_t0 ** 2
    return ShiftPrediction(
        delta_x=dx,
        peak=(spec.x0 + spec.v0 * t + dx, spec.v0),
        transmission_estimate=est,
        peak_estimate=est * float(np.exp((gamma * spec.sigma / spec.v0) ** 2)),
        warnings=warnings,
    )


def _xi_exact(spec: WavePacketSpec, x_tilde, v_tilde, t, gamma) -> Fraction:
    """Xi in exact rational arithmetic from the binary values of the inputs."""
    F = Fraction
    a0 = F(1) / (2 * F(spec.sigma) ** 2)
    x0, v0, m, hbar = F(spec.x0), F(spec.v0), F(spec.mass), F(HBAR)
    lag = x_tilde - v_tilde * F(t)
    U = a0 * (v_tilde ** 2 + v0 ** 2)
    V_R = 2 * a0 * (lag * v_tilde + x0 * v0)
    V_I = m * (v_tilde ** 2 - v0 ** 2) / (2 * hbar)
    W = 2 * a0 * (lag ** 2 + x0 ** 2)
    return ((V_R - F(gamma)) ** 2 - V_I ** 2) / (2 * U) - W


def xi_derivatives(spec: WavePacketSpec, x_tilde: float, v_tilde: float, t: float, gamma: float,
                   step: float = FD_STEP):
    """Central finite-difference gradient and Hessian of Xi in (x_tilde, v_tilde).

    Steps are ``step`` times sigma in x_tilde and hbar / (m sigma) in v_tilde.
    Xi is of order tens near the peak while its curvature is of order one in
    these units, so the stencil is evaluated exactly (rational arithmetic) to
    leave only the O(step^2) truncation error.
    """
    hx = Fraction(step * spec.sigma)
    hv = Fraction(step * HBAR / (spec.mass * spec.sigma))
    x, v = Fraction(x_tilde), Fraction(v_tilde)

    def f(i, j):
        return _xi_exact(spec, x + i * hx, v + j * hv, t, gamma)

    f0 = f(0, 0)
    fxp, fxm, fvp, fvm = f(1, 0), f(-1, 0), f(0, 1), f(0, -1)
    grad = [(fxp - fxm) / (2 * hx), (fvp - fvm) / (2 * hv)]
    fxx = (fxp - 2 * f0 + fxm) / hx ** 2
    fvv = (fvp - 2 * f0 + fvm) / hv ** 2
    fxv = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * hx * hv)
    return (np.array([float(g) for g in grad]),
            np.array([[float(fxx), float(fxv)], [float(fxv), float(fvv)]]))
