"""Composite Gauss-Legendre quadrature for smooth, oscillatory complex integrands.

Refinement doubles the number of panels; the error estimate is the relative
change between successive refinements.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

ERROR_FLOOR = 1e-300
# memory guard for the 2D rule: N^2/2 kernel evaluations
MAX_2D_NODES = 4096


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    panels: int = 64
    nodes_per_panel: int = 16
    rel_tol: float = 1e-8
    max_refinements: int = 6

    def __post_init__(self):
        if int(self.panels) != self.panels or self.panels < 1:
            raise ValueError(f"panels must be a positive integer, got {self.panels}")
        if int(self.nodes_per_panel) != self.nodes_per_panel or self.nodes_per_panel < 2:
            raise ValueError(f"nodes_per_panel must be an integer >= 2, got {self.nodes_per_panel}")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 0:
            raise ValueError(f"max_refinements must be a non-negative integer, got {self.max_refinements}")

    @property
    def nodes(self) -> int:
        return self.panels * self.nodes_per_panel

    def doubled(self, times: int = 1) -> "QuadratureConfig":
        return QuadratureConfig(self.panels * 2**times, self.nodes_per_panel, self.rel_tol, self.max_refinements)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    error_estimate: float
    refinements_used: int
    nodes: int

    @property
    def converged_to(self) -> float:
        return self.error_estimate


@lru_cache(maxsize=32)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_rule(a: float, b: float, panels: int, nodes_per_panel: int):
    """Nodes and weights of the composite Gauss-Legendre rule on [a, b], ordered by node."""
    if not b > a:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    x, w = _legendre(nodes_per_panel)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _check_finite(values, nodes):
    bad = ~np.isfinite(values)
    if np.any(bad):
        where = np.asarray(nodes)[np.argmax(bad)]
        raise QuadratureError(f"non-finite integrand sample at tau = {where!r}")


def _relative_change(new, old):
    return float(abs(new - old) / max(abs(new), ERROR_FLOOR))


def integrate_1d(f, a: float, b: float, cfg: QuadratureConfig = QuadratureConfig()) -> IntegralResult:
    """Integrate a vectorised complex function over [a, b].

    Refines by panel doubling until the relative change drops below
    ``cfg.rel_tol`` or ``cfg.max_refinements`` doublings have been made.
    """

    def rule(panels):
        nodes, weights = composite_rule(a, b, panels, cfg.nodes_per_panel)
        vals = np.asarray(f(nodes), dtype=complex)
        _check_finite(vals, nodes)
        return np.sum(weights * vals)

    panels = cfg.panels
    prev = rule(panels)
    err = np.inf
    used = 0
    for used in range(1, cfg.max_refinements + 1):
        panels *= 2
        cur = rule(panels)
        err = _relative_change(cur, prev)
        prev = cur
        if err <= cfg.rel_tol:
            break
    return IntegralResult(complex(prev), err, used, panels * cfg.nodes_per_panel)


def hermitian_form(g, nodes, weights, rel_tol, row_block=256):
    """sum_ij w_i w_j g(tau_i, tau_j) for a Hermitian kernel, from the lower triangle only.

    The kernel ``g(tau, tau_prime)`` must broadcast. Returns the real value.
    """
    n = nodes.size
    diag = np.asarray(g(nodes, nodes), dtype=complex)
    _check_finite(diag, nodes)
    diag_sum = np.sum(weights**2 * diag)
    off = 0.0 + 0.0j
    gmax = float(np.max(np.abs(diag))) if n else 0.0
    for start in range(1, n, row_block):
        rows = np.arange(start, min(start + row_block, n))
        ti = nodes[rows][:, None]
        tj = nodes[None, :start + row_block]
        block = np.asarray(g(ti, tj), dtype=complex)
        mask = np.arange(tj.shape[1])[None, :] < rows[:, None]
        block = np.where(mask, block, 0.0)
        _check_finite(block, np.broadcast_to(ti, block.shape))
        gmax = max(gmax, float(np.max(np.abs(block))))
        off += np.sum((weights[rows][:, None] * weights[None, :tj.shape[1]]) * block)

    value = float(diag_sum.real + 2.0 * off.real)
    scale = max(abs(value), float(np.sum(weights**2 * np.abs(diag))), ERROR_FLOOR)
    if abs(diag_sum.imag) > rel_tol * scale:
        raise QuadratureError(f"kernel diagonal is not real: imaginary part {diag_sum.imag:.3e} vs scale {scale:.3e}")

    # spot-check g(tau', tau) = conj g(tau, tau') on fixed pairs
    if n > 1:
        k = np.linspace(1, n - 1, min(16, n - 1)).astype(int)
        i, j = k, k // 2
        lhs = np.asarray(g(nodes[i], nodes[j]), dtype=complex)
        rhs = np.asarray(g(nodes[j], nodes[i]), dtype=complex)
        viol = float(np.max(np.abs(lhs - np.conj(rhs))))
        if viol > rel_tol * max(gmax, ERROR_FLOOR):
            raise QuadratureError(f"kernel violates Hermitian symmetry by {viol:.3e} (max |g| = {gmax:.3e})")
    return value


def integrate_2d_hermitian(g, t: float, cfg: QuadratureConfig = QuadratureConfig()) -> IntegralResult:
    """Tensor-product rule on [0, t]^2 for a kernel with g(tau, tau') = conj g(tau', tau).

    Only tau' <= tau is evaluated; the result is real.
    """

    def rule(panels):
        nodes, weights = composite_rule(0.0, t, panels, cfg.nodes_per_panel)
        return hermitian_form(g, nodes, weights, cfg.rel_tol)

    panels = cfg.panels
    prev = rule(panels)
    err = np.inf
    used = 0
    for used in range(1, cfg.max_refinements + 1):
        if 2 * panels * cfg.nodes_per_panel > MAX_2D_NODES:
            used -= 1
            break
        panels *= 2
        cur = rule(panels)
        err = _relative_change(cur, prev)
        prev = cur
        if err <= cfg.rel_tol:
            break
    return IntegralResult(prev, err, used, panels * cfg.nodes_per_panel)
