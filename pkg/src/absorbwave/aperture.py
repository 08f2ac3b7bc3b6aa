"""Barrier transparency protocols chi(tau) in [0, 1].

Each protocol is an immutable callable; ``protocol(tau)`` broadcasts over arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ApertureError(ValueError):
    pass


class Protocol:
    name = "protocol"

    def __call__(self, tau):
        raise NotImplementedError

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class Free(Protocol):
    """Fully transparent barrier."""

    name = "free"

    def __call__(self, tau):
        return np.ones_like(np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class Exponential(Protocol):
    """chi0 exp(gamma tau); evaluation above 1 is an error."""

    chi0: float
    gamma: float
    name = "exponential"

    def __post_init__(self):
        if not 0.0 <= self.chi0 <= 1.0:
            raise ApertureError(f"chi0 must lie in [0, 1], got {self.chi0}")

    def __call__(self, tau):
        chi = self.chi0 * np.exp(self.gamma * np.asarray(tau, dtype=float))
        # chi0 = exp(-gamma t) reaches 1 at tau = t only up to rounding
        if np.any(chi > 1.0 + 1e-12):
            worst = np.max(chi)
            raise ApertureError(f"exponential aperture exceeds full transparency (chi = {worst:.6g})")
        return np.minimum(chi, 1.0)

    def params(self):
        return {"chi0": self.chi0, "gamma": self.gamma}


@dataclass(frozen=True)
class ShiftClamped(Protocol):
    """min(exp(gamma (tau - t1)), 1), t1 = 3 t0/2 for gamma > 0 and t0/2 otherwise."""

    gamma: float
    t0: float
    name = "shift"

    @property
    def t1(self) -> float:
        return 1.5 * self.t0 if self.gamma > 0 else 0.5 * self.t0

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        # exponent clipped at 0 so large |gamma tau| cannot overflow
        return np.exp(np.minimum(self.gamma * (tau - self.t1), 0.0))

    def params(self):
        return {"gamma": self.gamma, "t0": self.t0}


@dataclass(frozen=True)
class SplitCosh(Protocol):
    """min(cosh(gamma (tau - t0)) / cosh(gamma t0 / 2), 1)."""

    gamma: float
    t0: float
    name = "split"

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        g = abs(self.gamma)
        # cosh(a)/cosh(b) = exp(a - b) (1 + e^{-2a}) / (1 + e^{-2b}) for a, b >= 0
        a = g * np.abs(tau - self.t0)
        b = g * self.t0 / 2.0
        ratio = np.exp(np.minimum(a - b, 0.0)) * (1.0 + np.exp(-2.0 * a)) / (1.0 + np.exp(-2.0 * b))
        return np.where(a >= b, 1.0, np.minimum(ratio, 1.0))

    def params(self):
        return {"gamma": self.gamma, "t0": self.t0}


@dataclass(frozen=True)
class SqueezeExp(Protocol):
    """exp(-gamma |tau - t0|), gamma > 0."""

    gamma: float
    t0: float
    name = "squeeze"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ApertureError(f"squeeze aperture requires gamma > 0, got {self.gamma}")

    def __call__(self, tau):
        return np.exp(-self.gamma * np.abs(np.asarray(tau, dtype=float) - self.t0))

    def params(self):
        return {"gamma": self.gamma, "t0": self.t0}


@dataclass(frozen=True)
class Tabulated(Protocol):
    """Piecewise-linear interpolation of (tau, chi) samples."""

    tau: tuple
    chi: tuple
    name = "custom"

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        chi = np.asarray(self.chi, dtype=float)
        if tau.ndim != 1 or tau.shape != chi.shape or tau.size < 2:
            raise ApertureError("tabulated aperture needs two equal-length columns with at least 2 rows")
        if np.any(np.diff(tau) <= 0):
            raise ApertureError("tabulated tau samples must be strictly increasing")
        if np.any((chi < 0) | (chi > 1)) or not np.all(np.isfinite(chi)):
            raise ApertureError("tabulated chi samples must lie in [0, 1]")
        object.__setattr__(self, "tau", tuple(tau.tolist()))
        object.__setattr__(self, "chi", tuple(chi.tolist()))

    def __call__(self, tau):
        q = np.asarray(tau, dtype=float)
        lo, hi = self.tau[0], self.tau[-1]
        if np.any((q < lo) | (q > hi)):
            raise ApertureError(f"tabulated aperture queried outside [{lo:g}, {hi:g}] s")
        return np.interp(q, self.tau, self.chi)

    def params(self):
        return {"samples": len(self.tau)}


@dataclass(frozen=True)
class Scaled(Protocol):
    """A protocol multiplied by a constant factor in [0, 1]."""

    base: Protocol
    factor: float
    name = "scaled"

    def __post_init__(self):
        if not 0.0 <= self.factor <= 1.0:
            raise ApertureError(f"scale factor must lie in [0, 1], got {self.factor}")

    def __call__(self, tau):
        return self.factor * self.base(tau)

    def params(self):
        return {"base": self.base.name, "factor": self.factor, **self.base.params()}


def evaluate(protocol: Protocol, tau):
    return protocol(tau)


def load_table(path) -> Tabulated:
    """Read a two-column CSV (tau in s, chi); a non-numeric first row is treated as a header."""
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise ApertureError(f"{path}:{i + 1}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise ApertureError(f"{path}:{i + 1}: non-numeric entry {row!r}") from None
    if not rows:
        raise ApertureError(f"{path}: no samples")
    tau, chi = zip(*rows)
    return Tabulated(tau, chi)


def make_protocol(name: str, gamma: float = 0.0, t0: float | None = None, chi0: float | None = None,
                  table=None) -> Protocol:
    """Build a protocol from a scenario name."""
    if name == "free":
        return Free()
    if name == "custom":
        if table is None:
            raise ApertureError("custom scenario needs a table")
        return table if isinstance(table, Tabulated) else load_table(table)
    if name == "exponential":
        if chi0 is None:
            raise ApertureError("exponential scenario needs chi0")
        return Exponential(chi0, gamma)
    if t0 is None:
        raise ApertureError(f"{name} scenario needs t0")
    if name == "shift":
        return ShiftClamped(gamma, t0)
    if name == "split":
        return SplitCosh(gamma, t0)
    if name == "squeeze":
        return SqueezeExp(gamma, t0) if gamma > 0 else Free()
    raise ApertureError(f"unknown scenario {name!r}")
