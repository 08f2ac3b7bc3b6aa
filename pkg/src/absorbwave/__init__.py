"""Gaussian wave packets crossing a thin absorbing barrier with time-dependent transparency.

The package evaluates pure-state and finite-temperature Husimi distributions of
the transmitted packet, the observables derived from them, and a steepest-descent
approximation used to cross-check the numerics.
"""

from absorbwave.physics import (
    AMU,
    HBAR,
    PhysicalConstants,
    RegimeReport,
    SimulationWindow,
    WavePacketSpec,
    paper_packet,
    paper_window,
    regime_report,
)
from absorbwave.aperture import (
    Exponential,
    Free,
    Scaled,
    ShiftClamped,
    SplitCosh,
    SqueezeExp,
    Tabulated,
    evaluate,
)
from absorbwave.quadrature import IntegralResult, QuadratureConfig, integrate_1d, integrate_2d_hermitian
from absorbwave.transmission import (
    HusimiField,
    ProbeSpec,
    husimi_grid,
    phi_kernel_bruteforce,
    phi_kernel_closed,
    pure_husimi,
    pure_overlap,
    thermal_husimi,
    transmitted_wavefunction,
)
from absorbwave.observables import ObservableReport, analyze, default_grid
from absorbwave.semiclassics import (
    SaddleCoefficients,
    ShiftPrediction,
    predicted_shift,
    saddle_coefficients,
    semiclassical_husimi,
    xi_exponent,
)
from absorbwave.config import RunConfig, parse_config, serialize
from absorbwave.runner import RunSummary, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AMU", "HBAR", "PhysicalConstants", "RegimeReport", "SimulationWindow", "WavePacketSpec", "paper_packet",
    "paper_window", "regime_report", "Exponential", "Free", "Scaled", "ShiftClamped", "SplitCosh", "SqueezeExp",
    "Tabulated", "evaluate", "IntegralResult", "QuadratureConfig", "integrate_1d", "integrate_2d_hermitian",
    "HusimiField", "ProbeSpec", "husimi_grid", "phi_kernel_bruteforce", "phi_kernel_closed", "pure_husimi",
    "pure_overlap", "thermal_husimi", "transmitted_wavefunction", "ObservableReport", "analyze", "default_grid",
    "SaddleCoefficients", "ShiftPrediction", "predicted_shift", "saddle_coefficients", "semiclassical_husimi",
    "xi_exponent", "RunConfig", "parse_config", "serialize", "RunSummary", "run_scenario",
]
