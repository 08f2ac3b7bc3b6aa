"""Transmitted wave function and Husimi distributions behind a time-dependent barrier.

The pure-state Husimi value is the squared modulus of a single time integral
over the barrier-crossing time tau. The thermal value averages the pure one
over a Gaussian distribution of initial velocities; the velocity average is
Gaussian and done in closed form, leaving a double integral over (tau, tau')
with a Hermitian kernel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from absorbwave.aperture import Protocol
from absorbwave.gaussian import evolved_width, free_propagator, gaussian_at_origin, psi_at_barrier
from absorbwave.physics import HBAR, WavePacketSpec
from absorbwave.quadrature import (
    QuadratureConfig,
    QuadratureError,
    composite_rule,
    integrate_1d,
    integrate_2d_hermitian,
)

# relative size of a negative thermal value still attributed to roundoff
NEGATIVE_CLAMP = 1e-10
# probes per block in grid evaluation; fixed so results do not depend on worker count
GRID_BLOCK = 512


class KernelError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProbeSpec:
    """Probe Gaussian centred at (x_tilde, v_tilde) with the packet's width alpha0."""

    x_tilde: float
    v_tilde: float
    alpha0: float

    def __post_init__(self):
        if not self.x_tilde > 0:
            raise ValueError(f"probe must sit in the transmission region x_tilde > 0, got {self.x_tilde}")
        if self.v_tilde == 0 or not np.isfinite(self.v_tilde):
            raise ValueError("probe velocity must be finite and non-zero")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")

    @classmethod
    def for_packet(cls, spec: WavePacketSpec, x_tilde: float, v_tilde: float) -> "ProbeSpec":
        return cls(float(x_tilde), float(v_tilde), spec.alpha0)

    @property
    def t_tilde(self) -> float:
        return self.x_tilde / self.v_tilde


@dataclass(frozen=True)
class PhiKernelTerms:
    """Coefficients of the Gaussian velocity integral: exp(-A v^2 + B v - C) (R v^2 + S v + T)."""

    A: complex
    B: complex
    C: complex
    R: complex
    S: complex
    T: complex


@dataclass
class HusimiField:
    x_grid: np.ndarray
    v_grid: np.ndarray
    values: np.ndarray  # shape (len(x_grid), len(v_grid))
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        self.v_grid = np.asarray(self.v_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x_grid.size, self.v_grid.size):
            raise ValueError(f"values shape {self.values.shape} does not match grid "
                             f"({self.x_grid.size}, {self.v_grid.size})")
        if self.kind not in ("pure", "thermal"):
            raise ValueError(f"kind must be 'pure' or 'thermal', got {self.kind!r}")


# -- velocity factors -------------------------------------------------------------------------

def _probe_factor(alpha0, mass, x_tilde, v_tilde, t, tau):
    """alpha_{t - tau} v_tilde / alpha_{t_tilde}."""
    return evolved_width(alpha0, mass, t - tau) * v_tilde / evolved_width(alpha0, mass, x_tilde / v_tilde)


def _state_factor(spec: WavePacketSpec, tau, v):
    """alpha_tau v / alpha_{|x0|/v}."""
    return evolved_width(spec.alpha0, spec.mass, tau) * v / evolved_width(spec.alpha0, spec.mass, abs(spec.x0) / v)


def _probe_amplitude(spec, x_tilde, v_tilde, t, tau):
    return gaussian_at_origin(spec.alpha0, spec.mass, x_tilde, v_tilde, tau - t)


# -- transmitted wave function ----------------------------------------------------------------

def transmitted_wavefunction(spec: WavePacketSpec, protocol: Protocol, x: float, t: float,
                             cfg: QuadratureConfig = QuadratureConfig(), cutoff: float | None = None) -> complex:
    """Transmitted wave function Psi^(t)(x) for x > 0 from the single-tau integral.

    The factor x/(t - tau) K_0^(t - tau)(x) oscillates without bound as tau -> t.
    Its phase is linear in u = 1/(t - tau), so the integral is done in u on
    [1/t, 1/cutoff]; the dropped end contributes at the level of the integrand
    there divided by its phase rate. ``cutoff`` defaults to 1e-3 t.
    """
    if not x > 0:
        raise ValueError(f"transmitted wave function needs x > 0, got {x}")
    delta = 1e-3 * t if cutoff is None else cutoff
    if not 0 < delta < t:
        raise ValueError("cutoff must lie in (0, t)")
    m = spec.mass
    a_t0 = evolved_width(spec.alpha0, m, spec.t0)

    def integrand_tau(tau):
        s = t - tau
        fac = x / s + evolved_width(spec.alpha0, m, tau) * spec.v0 / a_t0
        return 0.5 * protocol(tau) * fac * free_propagator(m, s, x) * psi_at_barrier(spec, spec.v0, tau)

    def integrand_u(u):
        return integrand_tau(t - 1.0 / u) / u**2

    # first half in tau, rest in u where the propagator phase m x^2 u / (2 hbar) is linear
    head = integrate_1d(integrand_tau, 0.0, 0.5 * t, cfg)
    k = m * x**2 / (2.0 * HBAR)
    u_lo, u_hi = 2.0 / t, 1.0 / delta
    rate = k + m * spec.v0**2 / (2.0 * HBAR) * (t / 2.0) ** 2
    panels = max(cfg.panels, int(math.ceil(rate * (u_hi - u_lo) / 2.0)))
    tail_cfg = QuadratureConfig(panels, cfg.nodes_per_panel, cfg.rel_tol, min(cfg.max_refinements, 2))
    tail = integrate_1d(integrand_u, u_lo, u_hi, tail_cfg)
    return head.value + tail.value


# -- pure state -------------------------------------------------------------------------------

def overlap_integrand(spec: WavePacketSpec, protocol: Protocol, probe: ProbeSpec, t: float):
    """Integrand over tau of <probe | transmitted state>; vectorised in tau."""
    m, a0 = spec.mass, spec.alpha0
    a_t0 = evolved_width(a0, m, spec.t0)

    def f(tau):
        tau = np.asarray(tau, dtype=float)
        fac = (_probe_factor(a0, m, probe.x_tilde, probe.v_tilde, t, tau)
               + evolved_width(a0, m, tau) * spec.v0 / a_t0)
        return (0.5 * protocol(tau) * fac
                * np.conj(_probe_amplitude(spec, probe.x_tilde, probe.v_tilde, t, tau))
                * psi_at_barrier(spec, spec.v0, tau))

    return f


def pure_overlap(spec: WavePacketSpec, protocol: Protocol, probe: ProbeSpec, t: float,
                 cfg: QuadratureConfig = QuadratureConfig(), full: bool = False):
    res = integrate_1d(overlap_integrand(spec, protocol, probe, t), 0.0, t, cfg)
    return res if full else res.value


def pure_husimi(spec: WavePacketSpec, protocol: Protocol, probe: ProbeSpec, t: float,
                cfg: QuadratureConfig = QuadratureConfig()) -> float:
    return abs(pure_overlap(spec, protocol, probe, t, cfg)) ** 2


# -- thermal kernel ---------------------------------------------------------------------------

def phi_terms(spec: WavePacketSpec, probe: ProbeSpec, t: float, tau, tau_prime) -> PhiKernelTerms:
    m, a0, x0 = spec.mass, spec.alpha0, spec.x0
    if not spec.delta_v > 0:
        raise KernelError("thermal kernel needs delta_v > 0")
    tau = np.asarray(tau, dtype=float)
    tau_p = np.asarray(tau_prime, dtype=float)
    a = evolved_width(a0, m, tau)
    ap = np.conj(evolved_width(a0, m, tau_p))
    inv_dv2 = 1.0 / spec.delta_v**2
    A = inv_dv2 + 1j * m * (tau * a - tau_p * ap) / (2.0 * HBAR * a0)
    B = 2.0 * spec.v0 * inv_dv2 - 1j * m * x0 * (a - ap) / (HBAR * a0)
    C = spec.v0**2 * inv_dv2 + (a + ap) * x0**2
    R = a * ap / a0**2
    pf = _probe_factor(a0, m, probe.x_tilde, probe.v_tilde, t, tau)
    pfp = np.conj(_probe_factor(a0, m, probe.x_tilde, probe.v_tilde, t, tau_p))
    S = (a * pfp + pf * ap) / a0
    T = (pf - 2j * HBAR * x0 * a / m) * (pfp + 2j * HBAR * x0 * ap / m)
    return PhiKernelTerms(A, B, C, R, S, T)


def _gaussian_moments(spec: WavePacketSpec, tau, tau_prime):
    """Velocity-average building blocks shared by every probe.

    Returns (K, mu, var) such that the kernel is K * (T + S mu + R (mu^2 + var)).
    The exponent B^2/(4A) - C and the mean B/(2A) are rearranged so the
    1/delta_v^2 parts cancel analytically; the direct form loses all digits
    as delta_v -> 0.
    """
    m, a0, x0, v0 = spec.mass, spec.alpha0, spec.x0, spec.v0
    if not spec.delta_v > 0:
        raise KernelError("thermal kernel needs delta_v > 0")
    tau = np.asarray(tau, dtype=float)
    tau_p = np.asarray(tau_prime, dtype=float)
    a = evolved_width(a0, m, tau)
    ap = np.conj(evolved_width(a0, m, tau_p))
    Ai = m * (tau * a - tau_p * ap) / (2.0 * HBAR * a0)
    Bi = -m * x0 * (a - ap) / (HBAR * a0)
    Cr = (a + ap) * x0**2
    A = 1.0 / spec.delta_v**2 + 1j * Ai
    if np.any(A.real <= 0):
        raise KernelError("Re A <= 0: velocity integral diverges")
    shift = Bi - 2.0 * Ai * v0
    exponent = -1j * Ai * v0**2 + 1j * Bi * v0 - Cr - shift**2 / (4.0 * A)
    mu = v0 + 1j * shift / (2.0 * A)
    R = a * ap / a0**2
    K = (np.sqrt(2.0 * R * a0 / np.pi) / spec.delta_v) * np.exp(-0.5 * np.log(A) + exponent)
    return K, mu, 0.5 / A


def phi_kernel_closed(spec: WavePacketSpec, probe: ProbeSpec, t: float, tau, tau_prime):
    """Thermal velocity average of the two crossing amplitudes, in closed form."""
    terms = phi_terms(spec, probe, t, tau, tau_prime)
    K, mu, var = _gaussian_moments(spec, tau, tau_prime)
    return K * (terms.T + terms.S * mu + terms.R * (mu**2 + var))


def phi_kernel_literal(spec: WavePacketSpec, probe: ProbeSpec, t: float, tau, tau_prime):
    """The closed form written term by term; accurate only for moderate delta_v."""
    p = phi_terms(spec, probe, t, tau, tau_prime)
    A = p.A
    if np.any(A.real <= 0):
        raise KernelError("Re A <= 0: velocity integral diverges")
    sqrtA = np.exp(0.5 * np.log(A))
    return (np.sqrt(2.0 * p.R * spec.alpha0 / np.pi) / spec.delta_v
            * (p.T / sqrtA + (p.B * p.S + p.R) / (2.0 * sqrtA**3) + p.B**2 * p.R / (4.0 * sqrtA**5))
            * np.exp(p.B**2 / (4.0 * A) - p.C))


def velocity_integrand(spec: WavePacketSpec, probe: ProbeSpec, t: float, tau: float, tau_prime: float):
    """Integrand of the thermal velocity average as an entire function of complex v.

    On the real axis it is the Gaussian weight times the two crossing amplitudes;
    the conjugated factor is written as conj(g(conj v)) so that it continues
    analytically. alpha_tau v / alpha_{|x0|/v} is expanded to
    alpha_tau (v + 2 i hbar alpha0 |x0| / m) / alpha0, which is polynomial in v.
    """
    m, a0, dv = spec.mass, spec.alpha0, spec.delta_v
    pf = _probe_factor(a0, m, probe.x_tilde, probe.v_tilde, t, tau)
    pfp = _probe_factor(a0, m, probe.x_tilde, probe.v_tilde, t, tau_prime)
    a_tau = evolved_width(a0, m, tau)
    a_taup = evolved_width(a0, m, tau_prime)
    shift = 2j * HBAR * a0 * abs(spec.x0) / m

    def f(v):
        v = np.asarray(v, dtype=complex)
        vb = np.conj(v)
        weight = np.exp(-((v - spec.v0) / dv) ** 2) / (math.sqrt(math.pi) * dv)
        left = pf + a_tau * (v + shift) / a0
        right = np.conj(pfp + a_taup * (vb + shift) / a0)
        return (weight * left * right * gaussian_at_origin(a0, m, spec.x0, v, tau)
                * np.conj(gaussian_at_origin(a0, m, spec.x0, vb, tau_prime)))

    return f


def _saddle(f, start: complex, h: float, iterations: int = 60):
    """Stationary point of log f by Newton steps on finite-difference derivatives.

    Returns the point and a = -(log f)''/2 there.
    """
    v = complex(start)
    a = None
    for _ in range(iterations):
        fp, f0, fm = complex(f(v + h)), complex(f(v)), complex(f(v - h))
        if f0 == 0:
            raise KernelError("velocity integrand vanishes at the saddle search point")
        d1 = (fp - fm) / (2 * h * f0)
        d2 = (fp - 2 * f0 + fm) / (h * h * f0) - d1 * d1
        a = -0.5 * d2
        step = -d1 / d2
        v += step
        if abs(step) < 1e-13 * abs(v):
            break
    return v, a


def phi_kernel_bruteforce(spec: WavePacketSpec, probe: ProbeSpec, t: float, tau: float, tau_prime: float,
                          vcfg: QuadratureConfig = QuadratureConfig(panels=8, nodes_per_panel=16, rel_tol=1e-13,
                                                                    max_refinements=3),
                          contour: str = "steepest", half_width: float = 8.0) -> complex:
    """Direct numerical velocity average of the two crossing amplitudes.

    ``contour="real"`` integrates v0 +/- half_width * delta_v on the real axis.
    That is exact in principle, but for tau far from tau' the integrand
    oscillates and cancels down to values far below its own size, so double
    precision cannot resolve it. ``contour="steepest"`` moves the path (Cauchy)
    onto the straight line through the numerically located saddle along which
    the integrand does not oscillate.
    """
    if not spec.delta_v > 0:
        raise KernelError("thermal kernel needs delta_v > 0")
    f = velocity_integrand(spec, probe, t, tau, tau_prime)
    dv = spec.delta_v
    if contour == "real":
        lo, hi = spec.v0 - half_width * dv, spec.v0 + half_width * dv
        return integrate_1d(lambda v: f(v), lo, hi, vcfg).value
    if contour != "steepest":
        raise ValueError(f"unknown contour {contour!r}")
    center, a = _saddle(f, spec.v0, 1e-3 * dv)
    if not (a is not None and a.real > 0):
        raise KernelError("velocity integrand has no Gaussian saddle")
    direction = np.exp(-0.5j * np.angle(a))
    # e^{-|a| s^2} along the line; the ends lie e^-40 below the peak
    width = math.sqrt(40.0 / abs(a))
    res = integrate_1d(lambda s: f(center + direction * s) * direction, -width, width, vcfg)
    return res.value


def thermal_integrand(spec: WavePacketSpec, protocol: Protocol, probe: ProbeSpec, t: float):
    """Kernel g(tau, tau') of the thermal Husimi double integral (1/4 included)."""

    def g(tau, tau_p):
        amp = np.conj(_probe_amplitude(spec, probe.x_tilde, probe.v_tilde, t, tau))
        amp_p = _probe_amplitude(spec, probe.x_tilde, probe.v_tilde, t, tau_p)
        return 0.25 * protocol(tau) * protocol(tau_p) * amp * amp_p * phi_kernel_closed(spec, probe, t, tau, tau_p)

    return g


def _clamp_negative(value, scale, where):
    if value >= 0:
        return value
    if -value <= NEGATIVE_CLAMP * scale:
        return 0.0
    raise KernelError(f"thermal Husimi negative beyond roundoff at {where}: {value:.3e} (scale {scale:.3e})")


def thermal_husimi(spec: WavePacketSpec, protocol: Protocol, probe: ProbeSpec, t: float,
                   cfg: QuadratureConfig = QuadratureConfig(), full: bool = False):
    if not spec.delta_v > 0:
        raise KernelError("thermal Husimi needs delta_v > 0; use pure_husimi")
    res = integrate_2d_hermitian(thermal_integrand(spec, protocol, probe, t), t, cfg)
    # Cauchy-Schwarz bound of the positive kernel sets the roundoff scale
    nodes, weights = composite_rule(0.0, t, cfg.panels, cfg.nodes_per_panel)
    diag = np.abs(thermal_integrand(spec, protocol, probe, t)(nodes, nodes))
    scale = float(np.sum(weights * np.sqrt(diag))) ** 2
    value = _clamp_negative(res.value, scale, (probe.x_tilde, probe.v_tilde))
    return res if full else value


# -- grids ------------------------------------------------------------------------------------

class _Nodes:
    """Probe-independent data on the tau nodes."""

    def __init__(self, spec, protocol, t, cfg, thermal):
        self.nodes, self.weights = composite_rule(0.0, t, cfg.panels, cfg.nodes_per_panel)
        tau = self.nodes
        m, a0 = spec.mass, spec.alpha0
        self.chi = np.asarray(protocol(tau), dtype=float)
        a = evolved_width(a0, m, tau)
        self.state_pure = a * spec.v0 / evolved_width(a0, m, spec.t0)
        self.psi = psi_at_barrier(spec, spec.v0, tau)
        if thermal:
            K, mu, var = _gaussian_moments(spec, tau[:, None], tau[None, :])
            self.G0 = _hermitize(K)
            self.G1 = _hermitize(K * mu)
            self.G2 = _hermitize(K * (mu**2 + var))
            self.c = a / a0
            self.b = -2j * HBAR * spec.x0 * a / m
            # diagonal of the kernel polynomial weight, for roundoff scale
            self.K_diag = np.abs(np.diag(K))


def _hermitize(M):
    low = np.tril(M, -1)
    return low + low.conj().T + np.diag(np.diag(M).real)


def _probe_block(spec, t, nd, X, V):
    """Probe-side arrays for a block of probes, shape (P, N)."""
    m, a0 = spec.mass, spec.alpha0
    tau = nd.nodes[None, :]
    X = X[:, None]
    V = V[:, None]
    pf = evolved_width(a0, m, t - tau) * V / evolved_width(a0, m, X / V)
    amp = np.conj(gaussian_at_origin(a0, m, X, V, tau - t))
    q = nd.weights * nd.chi * amp
    return pf, q


def _pure_block(spec, t, nd, X, V):
    pf, q = _probe_block(spec, t, nd, X, V)
    vals = 0.5 * q * (pf + nd.state_pure) * nd.psi
    return np.abs(np.sum(vals, axis=1)) ** 2


def _thermal_block(spec, t, nd, X, V):
    pf, q = _probe_block(spec, t, nd, X, V)
    y = q * (pf + nd.b)
    x = q * nd.c
    quad = (np.einsum("pi,pi->p", y @ nd.G0, y.conj())
            + 2.0 * np.einsum("pi,pi->p", x @ nd.G1, y.conj())
            + np.einsum("pi,pi->p", x @ nd.G2, x.conj()))
    return 0.25 * quad.real


def _evaluate_points(spec, protocol, X, V, t, cfg, kind, workers=1):
    """Husimi values at flat arrays of probe points with the fixed rule of ``cfg``."""
    thermal = kind == "thermal"
    if thermal and not spec.delta_v > 0:
        raise KernelError("thermal grid needs delta_v > 0")
    nd = _Nodes(spec, protocol, t, cfg, thermal)
    block = _thermal_block if thermal else _pure_block
    out = np.empty(X.size)
    starts = list(range(0, X.size, GRID_BLOCK))

    def run(s):
        sl = slice(s, s + GRID_BLOCK)
        vals = block(spec, t, nd, X[sl], V[sl])
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmax(~np.isfinite(vals))) + s
            raise QuadratureError(f"non-finite Husimi value at x_tilde={X[bad]:.6e} m, v_tilde={V[bad]:.6e} m/s")
        out[sl] = vals

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return out


def husimi_grid(spec: WavePacketSpec, protocol: Protocol, x_grid, v_grid, t: float,
                cfg: QuadratureConfig = QuadratureConfig(), kind: str = "pure", workers: int = 1,
                check_convergence: bool = True) -> HusimiField:
    """Evaluate the pure or thermal Husimi distribution on a tensor grid.

    All points share the rule fixed by ``cfg`` (no per-point refinement). With
    ``check_convergence`` the field maximum is recomputed with doubled panels
    and the relative change is stored in the metadata.
    """
    if kind not in ("pure", "thermal"):
        raise ValueError(f"kind must be 'pure' or 'thermal', got {kind!r}")
    x_grid = np.asarray(x_grid, dtype=float)
    v_grid = np.asarray(v_grid, dtype=float)
    for name, g in (("x_grid", x_grid), ("v_grid", v_grid)):
        if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0):
            raise ValueError(f"{name} must be a strictly increasing 1D array")
    if np.any(x_grid <= 0):
        raise ValueError("probe positions must lie in the transmission region x_tilde > 0")
    if np.any(v_grid == 0):
        raise ValueError("probe velocities must be non-zero")
    X, V = np.meshgrid(x_grid, v_grid, indexing="ij")
    flat = _evaluate_points(spec, protocol, X.ravel(), V.ravel(), t, cfg, kind, workers)
    values = flat.reshape(X.shape)

    meta = {"packet": spec.as_dict(), "t": t, "aperture": {"name": protocol.name, **protocol.params()},
            "quadrature": cfg.as_dict(), "tau_nodes": cfg.nodes}
    vmax = float(np.max(values)) if values.size else 0.0
    if kind == "thermal":
        worst = float(np.min(values))
        if worst < 0:
            if -worst > NEGATIVE_CLAMP * vmax:
                i, j = np.unravel_index(int(np.argmin(values)), values.shape)
                raise KernelError(f"thermal Husimi negative beyond roundoff at x_tilde={x_grid[i]:.6e}, "
                                  f"v_tilde={v_grid[j]:.6e}: {worst:.3e} vs max {vmax:.3e}")
            values = np.maximum(values, 0.0)
        meta["min_before_clamp"] = worst
    if check_convergence and vmax > 0:
        i, j = np.unravel_index(int(np.argmax(values)), values.shape)
        px, pv = np.array([x_grid[i]]), np.array([v_grid[j]])
        fine = _evaluate_points(spec, protocol, px, pv, t, cfg.doubled(), kind)[0]
        meta["convergence_check"] = {
            "x_tilde": float(x_grid[i]), "v_tilde": float(v_grid[j]),
            "relative_change_on_doubling": abs(fine - values[i, j]) / max(abs(fine), 1e-300),
        }
    return HusimiField(x_grid, v_grid, values, kind, meta)


def husimi_points(spec, protocol, x, v, t, cfg=QuadratureConfig(), kind="pure"):
    """Husimi values at scattered probe points with the fixed rule of ``cfg``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    x, v = np.broadcast_arrays(x, v)
    return _evaluate_points(spec, protocol, x.ravel(), v.ravel(), t, cfg, kind).reshape(x.shape)
