"""Shared reference fields. Thermal grids take seconds each, so they are cached per session."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from absorbwave.aperture import make_protocol
from absorbwave.observables import analyze, default_grid
from absorbwave.physics import HBAR, paper_packet
from absorbwave.transmission import husimi_grid

T = 0.1
THERMAL = paper_packet()
PURE = paper_packet(0.0)
SIGMA_V = HBAR / (PURE.mass * PURE.sigma)


def protocol(name: str, gamma: float):
    return make_protocol(name, gamma, THERMAL.t0)


@lru_cache(maxsize=None)
def field(name: str, gamma: float, kind: str = "thermal", nx: int = 161, nv: int = 161):
    spec = THERMAL if kind == "thermal" else PURE
    xg, vg = default_grid(spec, T, nx, nv)
    return husimi_grid(spec, protocol(name, gamma), xg, vg, T, kind=kind)


@lru_cache(maxsize=None)
def report(name: str, gamma: float, kind: str = "thermal"):
    return analyze(field(name, gamma, kind))


def gaussian_field(x, v, mx, mv, sx, sv, rho=0.0, scale=1.0):
    X, V = np.meshgrid(x, v, indexing="ij")
    a, b = (X - mx) / sx, (V - mv) / sv
    q = (a * a - 2 * rho * a * b + b * b) / (1 - rho * rho)
    return scale * np.exp(-0.5 * q)
