"""Physical constants, wave-packet parameters and the semiclassical regime diagnostic.

Everything is SI double precision. Masses enter in unified atomic mass units
through :meth:`WavePacketSpec.from_amu` and are converted once.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

HBAR = 1.054571817e-34  # J s
AMU = 1.66053906660e-27  # kg

# "a << b" means a <= b / MUCH_LESS; "a <~ b" means a <= LESSSIM_SLACK * b
MUCH_LESS = 5.0
LESSSIM_SLACK = 1.1
# comparisons tolerate rounding so that boundary values such as |x0|/sigma = 5 count as satisfied
ROUNDING = 1e-9


def at_most(a: float, b: float) -> bool:
    return a <= b * (1.0 + ROUNDING)


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR
    atomic_mass_unit: float = AMU


@dataclass(frozen=True)
class WavePacketSpec:
    """Initial Gaussian packet: mass [kg], width sigma [m], centre x0 [m],
    mean velocity v0 [m/s] and thermal velocity spread delta_v [m/s].

    The packet starts left of the barrier (x0 < 0) and moves towards it (v0 > 0).
    """

    mass: float
    sigma: float
    x0: float
    v0: float
    delta_v: float = 0.0

    def __post_init__(self):
        for name in ("mass", "sigma", "x0", "v0", "delta_v"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mass <= 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.delta_v < 0:
            raise ValueError(f"delta_v must be non-negative, got {self.delta_v}")
        if self.x0 >= 0:
            raise ValueError(f"x0 must be negative (packet left of the barrier), got {self.x0}")
        if self.v0 <= 0:
            raise ValueError(f"v0 must be positive (moving towards the barrier), got {self.v0}")

    @classmethod
    def from_amu(cls, mass_u, sigma, x0, v0, delta_v=0.0):
        return cls(mass=mass_u * AMU, sigma=sigma, x0=x0, v0=v0, delta_v=delta_v)

    @property
    def mass_u(self) -> float:
        return self.mass / AMU

    @property
    def alpha0(self) -> float:
        """Inverse-area width parameter 1/(2 sigma^2)."""
        return 1.0 / (2.0 * self.sigma**2)

    @property
    def t0(self) -> float:
        """Classical arrival time at the barrier, |x0|/v0."""
        return abs(self.x0) / self.v0

    def with_delta_v(self, delta_v: float) -> "WavePacketSpec":
        return WavePacketSpec(self.mass, self.sigma, self.x0, self.v0, delta_v)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimulationWindow:
    t: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and self.t > 0):
            raise ValueError(f"propagation time must be positive, got {self.t}")

    def check(self, spec: WavePacketSpec) -> None:
        """Raise if the classical arrival time does not fall inside (0, t)."""
        if not spec.t0 < self.t:
            raise ValueError(
                f"arrival time t0={spec.t0:g} s must be shorter than the propagation time t={self.t:g} s"
            )


@dataclass(frozen=True)
class RegimeReport:
    lambdabar: float
    epsilon: float
    ratio_localization: float
    ratio_passage: float
    ratio_semiclassical: float
    gamma_bound: float
    localized: bool
    passed: bool
    semiclassical: bool

    @property
    def satisfied(self) -> bool:
        return self.localized and self.passed and self.semiclassical

    def gamma_ok(self, gamma: float) -> bool:
        """Whether |gamma| is well below the arrival-time bound 2|x0|v0/sigma^2."""
        return at_most(abs(gamma), self.gamma_bound / MUCH_LESS)

    def warnings(self, gamma: float | None = None) -> list[str]:
        out = []
        if not self.localized:
            out.append(f"packet not well localized: |x0|/sigma = {self.ratio_localization:.3g}")
        if not self.passed:
            out.append(
                "packet has not passed the barrier: "
                f"|x0|/sigma = {self.ratio_localization:.3g} > v0 t/(2 sigma) = {self.ratio_passage:.3g}"
            )
        if not self.semiclassical:
            out.append(
                "not semiclassical: "
                f"v0 t/(2 sigma) = {self.ratio_passage:.3g} vs sigma/(2 lambdabar) = {self.ratio_semiclassical:.3g}"
            )
        if gamma is not None and not self.gamma_ok(gamma):
            out.append(f"|gamma| = {abs(gamma):g} 1/s is not << {self.gamma_bound:.4g} 1/s")
        return out

    def as_dict(self) -> dict:
        d = asdict(self)
        d["satisfied"] = self.satisfied
        return d


def regime_report(spec: WavePacketSpec, window: SimulationWindow) -> RegimeReport:
    """Evaluate the asymptotic-regime chain 1 << |x0|/sigma <~ v0 t/(2 sigma) << sigma/(2 lambdabar).

    Never raises; the flags are advisory.
    """
    lambdabar = HBAR / (spec.mass * spec.v0)
    loc = abs(spec.x0) / spec.sigma
    passage = spec.v0 * window.t / (2.0 * spec.sigma)
    semi = spec.sigma / (2.0 * lambdabar)
    return RegimeReport(
        lambdabar=lambdabar,
        epsilon=HBAR * window.t / (spec.mass * spec.sigma**2),
        ratio_localization=loc,
        ratio_passage=passage,
        ratio_semiclassical=semi,
        gamma_bound=2.0 * abs(spec.x0) * spec.v0 / spec.sigma**2,
        localized=at_most(1.0, loc / MUCH_LESS),
        passed=at_most(loc, LESSSIM_SLACK * passage),
        semiclassical=at_most(passage, semi / MUCH_LESS),
    )


PAPER_MASS_U = 86.909
PAPER_SIGMA = 30e-6
PAPER_X0 = -0.15e-3
PAPER_V0 = 3e-3
PAPER_DELTA_V = 0.1e-3
PAPER_T = 0.1


def paper_packet(delta_v: float = PAPER_DELTA_V) -> WavePacketSpec:
    """The 87Rb cloud used for all reference figures."""
    return WavePacketSpec.from_amu(PAPER_MASS_U, PAPER_SIGMA, PAPER_X0, PAPER_V0, delta_v)


def paper_window() -> SimulationWindow:
    return SimulationWindow(PAPER_T)
