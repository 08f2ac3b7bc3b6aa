"""Quantities read off a Husimi field: peak, moments, uncertainty, transmission, modality."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from absorbwave.physics import HBAR, WavePacketSpec
from absorbwave.transmission import HusimiField

# the transmission region starts at the barrier; default grids stop this close to it
X_FLOOR_SIGMAS = 0.05
EDGE_TOLERANCE = 1e-6
MIN_MASS_FRACTION = 0.999
DEFAULT_MODE_THRESHOLD = 0.1


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class ObservableReport:
    peak_x: float
    peak_v: float
    mean_x: float
    mean_v: float
    disp_x: float
    disp_v: float
    uncertainty: float  # in units of hbar
    transmission: float
    transmission_raw: float
    n_modes: int
    grid_mass_fraction: float

    def as_dict(self) -> dict:
        return asdict(self)


def default_grid(spec: WavePacketSpec, t: float, nx: int = 161, nv: int = 161):
    """Window centred on the free-flight phase-space point (x_t, v0).

    x_tilde spans x_t +/- 8 sigma, cut at the barrier side just inside x_tilde > 0;
    v_tilde spans v0 +/- 6 sqrt(delta_v^2 + (hbar/(m sigma))^2).
    """
    xt = spec.x0 + spec.v0 * t
    lo = max(X_FLOOR_SIGMAS * spec.sigma, xt - 8.0 * spec.sigma)
    hi = xt + 8.0 * spec.sigma
    if not hi > lo:
        raise ValueError("free-flight position lies behind the barrier; no transmission window")
    spread = np.hypot(spec.delta_v, HBAR / (spec.mass * spec.sigma))
    return np.linspace(lo, hi, nx), np.linspace(spec.v0 - 6.0 * spread, spec.v0 + 6.0 * spread, nv)


def _trapz2(values, x, v):
    return float(np.trapezoid(np.trapezoid(values, v, axis=1), x))


def _mass(field: HusimiField) -> float:
    return _trapz2(field.values, field.x_grid, field.v_grid)


def moments(field: HusimiField):
    """Mean and dispersion of x_tilde and v_tilde under the self-normalised field."""
    total = _mass(field)
    if not total > 0:
        raise ValueError("Husimi field has no mass")
    X, V = np.meshgrid(field.x_grid, field.v_grid, indexing="ij")
    H = field.values
    mx = _trapz2(X * H, field.x_grid, field.v_grid) / total
    mv = _trapz2(V * H, field.x_grid, field.v_grid) / total
    # central moments avoid cancellation against the large means
    vx = _trapz2((X - mx) ** 2 * H, field.x_grid, field.v_grid) / total
    vv = _trapz2((V - mv) ** 2 * H, field.x_grid, field.v_grid) / total
    return mx, mv, float(np.sqrt(max(vx, 0.0))), float(np.sqrt(max(vv, 0.0)))


def _field_mass(field: HusimiField, mass):
    if mass is not None:
        return mass
    try:
        return field.metadata["packet"]["mass"]
    except KeyError:
        raise ValueError("particle mass not given and not recorded in the field metadata") from None


def phase_space_uncertainty(field: HusimiField, mass: float | None = None) -> float:
    """delta_x * m * delta_v in J s."""
    _, _, dx, dv = moments(field)
    return dx * _field_mass(field, mass) * dv


def _edges(field):
    H = field.values
    return {"x_low": H[0, :], "x_high": H[-1, :], "v_low": H[:, 0], "v_high": H[:, -1]}


def _at_barrier(field, sigma):
    """Whether the low-x edge is the barrier side of the transmission region."""
    return field.x_grid[0] <= X_FLOOR_SIGMAS * sigma * (1 + 1e-9)


def edge_ratios(field: HusimiField) -> dict:
    vmax = float(np.max(field.values))
    return {k: float(np.max(e)) / vmax if vmax > 0 else 0.0 for k, e in _edges(field).items()}


def grid_mass_fraction(field: HusimiField) -> float:
    """Estimated fraction of the field's integral that lies inside the grid.

    Each edge's outward tail is extrapolated as an exponential whose decay
    length comes from the last two grid lines; a Gaussian tail decays faster,
    so the estimate errs on the low side.
    """
    H, x, v = field.values, field.x_grid, field.v_grid
    total = _mass(field)
    if not total > 0:
        return 0.0
    if x.size < 2 or v.size < 2:
        return 1.0
    lines = {
        "x_low": (np.trapezoid(H[0], v), np.trapezoid(H[1], v), x[1] - x[0]),
        "x_high": (np.trapezoid(H[-1], v), np.trapezoid(H[-2], v), x[-1] - x[-2]),
        "v_low": (np.trapezoid(H[:, 0], x), np.trapezoid(H[:, 1], x), v[1] - v[0]),
        "v_high": (np.trapezoid(H[:, -1], x), np.trapezoid(H[:, -2], x), v[-1] - v[-2]),
    }
    tail = 0.0
    for edge, inner, h in lines.values():
        if edge <= 0:
            continue
        if inner > edge:
            tail += edge * h / np.log(inner / edge)
        else:
            return 0.0
    return float(total / (total + tail))


def check_truncation(field: HusimiField, mode: str = "mass") -> None:
    """Raise TruncationError when the grid misses a noticeable part of the field.

    ``mode="mass"`` requires the extrapolated in-grid fraction to reach
    MIN_MASS_FRACTION. ``mode="edge"`` instead bounds every edge value by
    EDGE_TOLERANCE * max, exempting the low-x edge when it sits at the barrier.
    Kinked apertures give power-law velocity tails, for which the edge rule
    demands very wide windows while the mass rule still bounds the error.
    """
    if mode == "mass":
        frac = grid_mass_fraction(field)
        if frac < MIN_MASS_FRACTION:
            worst = max(edge_ratios(field).items(), key=lambda kv: kv[1])
            raise TruncationError(
                f"grid holds only {frac:.5f} of the Husimi mass (worst edge {worst[0]}, "
                f"edge/max = {worst[1]:.2e}); enlarge the grid")
        return
    if mode != "edge":
        raise ValueError(f"unknown truncation check {mode!r}")
    sigma = field.metadata.get("packet", {}).get("sigma")
    for k, r in edge_ratios(field).items():
        if k == "x_low" and sigma is not None and _at_barrier(field, sigma):
            continue
        if r > EDGE_TOLERANCE:
            raise TruncationError(
                f"Husimi field truncated at {k} edge (edge/max = {r:.2e} > {EDGE_TOLERANCE:g}); enlarge the grid")


def transmission_probability(field: HusimiField, mass: float | None = None, check: bool | str = True):
    """Transmission (m / (2 pi hbar)) * integral of H over the grid, and the raw integral.

    ``check`` is False, True (the mass audit) or a mode name for check_truncation.
    """
    m = _field_mass(field, mass)
    raw = _mass(field)
    if check:
        check_truncation(field, "mass" if check is True else check)
    return m / (2.0 * np.pi * HBAR) * raw, raw


def refine_peak(field: HusimiField):
    """Sub-cell peak location from a quadratic fit over the 3x3 block around the maximum.

    The fit is done on log H so that Gaussian peaks are located exactly.
    """
    H, x, v = field.values, field.x_grid, field.v_grid
    i, j = np.unravel_index(int(np.argmax(H)), H.shape)
    if not (0 < i < x.size - 1 and 0 < j < v.size - 1):
        return float(x[i]), float(v[j])
    block = H[i - 1:i + 2, j - 1:j + 2]
    # normalised offsets in units of local spacing
    dx = (x[i - 1:i + 2] - x[i]) / (x[i + 1] - x[i])
    dv = (v[j - 1:j + 2] - v[j]) / (v[j + 1] - v[j])
    DX, DV = np.meshgrid(dx, dv, indexing="ij")
    y = np.log(block) if np.all(block > 0) else block
    M = np.column_stack([np.ones(9), DX.ravel(), DV.ravel(), DX.ravel() ** 2, DX.ravel() * DV.ravel(), DV.ravel() ** 2])
    c = np.linalg.lstsq(M, y.ravel(), rcond=None)[0]
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    if np.linalg.det(hess) <= 0 or hess[0, 0] >= 0:
        return float(x[i]), float(v[j])
    off = np.linalg.solve(hess, -c[1:3])
    off = np.clip(off, -1.0, 1.0)
    return float(x[i] + off[0] * (x[i + 1] - x[i])), float(v[j] + off[1] * (v[j + 1] - v[j]))


def _prominences(H):
    """Topographic prominence of every local maximum (8-connected flooding from the top)."""
    nx, nv = H.shape
    order = np.argsort(-H, axis=None, kind="stable")
    parent = -np.ones(H.size, dtype=np.int64)
    peak = np.zeros(H.size, dtype=np.int64)
    flat = H.ravel()
    prom = {}

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for k in order:
        i, j = divmod(int(k), nv)
        roots = set()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ii, jj = i + di, j + dj
                if (di or dj) and 0 <= ii < nx and 0 <= jj < nv and parent[ii * nv + jj] >= 0:
                    roots.add(find(ii * nv + jj))
        parent[k] = k
        if not roots:
            peak[k] = k
            continue
        # the component with the highest peak absorbs the others at this level
        roots = sorted(roots, key=lambda r: -flat[peak[r]])
        top = roots[0]
        for r in roots[1:]:
            prom[int(peak[r])] = flat[peak[r]] - flat[k]
            parent[r] = top
        parent[k] = top
    for k in range(H.size):
        if parent[k] == k:
            prom[int(peak[k])] = flat[peak[k]]
    return prom


def local_maxima(field: HusimiField, rel_threshold: float = DEFAULT_MODE_THRESHOLD):
    """Grid indices of the significant local maxima, highest first.

    A maximum counts when both its height and its prominence (depth of the dip
    separating it from any higher maximum) reach rel_threshold * max; survivors
    closer than 2 cells are merged.
    """
    H = field.values
    vmax = float(np.max(H))
    if not vmax > 0:
        return []
    level = rel_threshold * vmax
    prom = _prominences(H)
    nv = H.shape[1]
    cand = [divmod(k, nv) for k, p in prom.items() if p >= level and H.flat[k] >= level]
    cand.sort(key=lambda ij: -H[ij])
    kept = []
    for ij in cand:
        if all(max(abs(ij[0] - k[0]), abs(ij[1] - k[1])) >= 2 for k in kept):
            kept.append(ij)
    return [(int(i), int(j)) for i, j in kept]


def modality(field: HusimiField, rel_threshold: float = DEFAULT_MODE_THRESHOLD) -> int:
    return len(local_maxima(field, rel_threshold))


def analyze(field: HusimiField, mass: float | None = None, rel_threshold: float = DEFAULT_MODE_THRESHOLD,
            check: bool | str = True) -> ObservableReport:
    m = _field_mass(field, mass)
    mx, mv, dx, dv = moments(field)
    px, pv = refine_peak(field)
    trans, raw = transmission_probability(field, m, check=check)
    return ObservableReport(
        peak_x=px, peak_v=pv, mean_x=mx, mean_v=mv, disp_x=dx, disp_v=dv,
        uncertainty=dx * m * dv / HBAR, transmission=trans, transmission_raw=raw,
        n_modes=modality(field, rel_threshold), grid_mass_fraction=grid_mass_fraction(field),
    )
