"""Scenario orchestration and result files."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from absorbwave.aperture import make_protocol
from absorbwave.config import RunConfig, serialize
from absorbwave.observables import ObservableReport, analyze, default_grid
from absorbwave.physics import RegimeReport, regime_report
from absorbwave.semiclassics import predicted_shift, semiclassical_field
from absorbwave.transmission import HusimiField, husimi_grid

EXIT_OK, EXIT_ERROR, EXIT_REGIME = 0, 1, 2
APERTURE_SAMPLES = 1000
SWEEP_COLUMNS = ("gamma_per_s", "peak_x_m", "peak_v_mps", "mean_x_m", "mean_v_mps", "disp_x_m", "disp_v_mps",
                 "uncertainty_hbar", "transmission", "transmission_raw", "n_modes", "grid_mass_fraction",
                 "exit_code")


class StageError(RuntimeError):
    """A failure inside one stage of a run; ``stage`` names it."""

    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage} stage failed: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class RunSummary:
    config: RunConfig
    observables: ObservableReport
    regime: RegimeReport
    warnings: list[str]
    diagnostics: dict
    predictions: dict | None
    wall_clock_s: float
    field: HusimiField | None = field(default=None, repr=False)

    @property
    def exit_code(self) -> int:
        return EXIT_REGIME if self.warnings else EXIT_OK

    def as_dict(self) -> dict:
        """Everything except the wall-clock time, which would break byte-identical reruns."""
        return {
            "observables": self.observables.as_dict(),
            "regime": self.regime.as_dict(),
            "warnings": list(self.warnings),
            "diagnostics": self.diagnostics,
            "predictions": self.predictions,
            "config": {"text": serialize(self.config), "values": self.config.as_dict()},
        }


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def husimi_csv(field: HusimiField) -> str:
    buf = io.StringIO()
    buf.write("x_tilde_m,v_tilde_mps,H\n")
    X, V = np.meshgrid(field.x_grid, field.v_grid, indexing="ij")
    for x, v, h in zip(X.ravel(), V.ravel(), field.values.ravel()):
        buf.write(f"{x:.17g},{v:.17g},{h:.17g}\n")
    return buf.getvalue()


def aperture_samples(protocol, t: float, n: int = APERTURE_SAMPLES):
    tau = np.linspace(0.0, t, n)
    return tau, np.asarray(protocol(tau), dtype=float) * np.ones_like(tau)


def aperture_csv(tau, chi) -> str:
    return "tau_s,chi\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in zip(tau, chi))


def _grid(cfg: RunConfig, spec):
    g = cfg.grid
    dx, dv = default_grid(spec, cfg.window.t_s, g.nx, g.nv)
    xg = np.linspace(g.x_min_m, g.x_max_m, g.nx) if g.x_min_m is not None else dx
    vg = np.linspace(g.v_min_mps, g.v_max_mps, g.nv) if g.v_min_mps is not None else dv
    return xg, vg


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage attached
        raise StageError(name, exc) from exc


def _predictions(cfg: RunConfig, spec, protocol, field: HusimiField):
    s = cfg.scenario
    pred = predicted_shift(spec, s.gamma_per_s, cfg.window.t_s, protocol)
    out = {"state": s.state, "shift": pred.as_dict()}
    if s.name == "exponential":
        px, pv = pred.peak
        out["semiclassical_peak_value"] = float(semiclassical_field(spec.with_delta_v(0.0), px, pv, cfg.window.t_s,
                                                                    protocol.chi0, s.gamma_per_s))
    return out


def run_scenario(cfg: RunConfig, write: bool = True) -> RunSummary:
    """Compute one Husimi field with its observables and, with ``write``, the result files.

    Failures raise StageError naming the stage (setup, aperture, husimi,
    observables, semiclassics, output).
    """
    start = time.perf_counter()
    spec = _stage("setup", cfg.packet_spec)
    window = _stage("setup", cfg.sim_window)
    t = window.t
    qcfg = _stage("setup", cfg.quadrature_config)
    s = cfg.scenario
    protocol = _stage("aperture", make_protocol, s.name, s.gamma_per_s, spec.t0, cfg.chi0(), s.table)
    tau, chi = _stage("aperture", aperture_samples, protocol, t)
    regime = regime_report(spec, window)
    warnings = regime.warnings(s.gamma_per_s if s.name != "free" else None)

    xg, vg = _stage("husimi", _grid, cfg, spec)
    fld = _stage("husimi", husimi_grid, spec, protocol, xg, vg, t, qcfg, s.state, cfg.grid.workers)
    obs = _stage("observables", analyze, fld, spec.mass)

    predictions = None
    if s.name in ("shift", "exponential"):
        predictions = _stage("semiclassics", _predictions, cfg, spec, protocol, fld)
        warnings += [w for w in predictions["shift"]["warnings"] if w not in warnings]

    meta = fld.metadata
    conv = meta.get("convergence_check", {})
    diagnostics = {
        "aperture": meta["aperture"],
        "quadrature": meta["quadrature"],
        "tau_nodes": meta["tau_nodes"],
        "convergence_check": conv,
        "converged": bool(conv.get("relative_change_on_doubling", 0.0) <= qcfg.rel_tol),
        "grid": {"nx": int(xg.size), "nv": int(vg.size), "x_range_m": [float(xg[0]), float(xg[-1])],
                 "v_range_mps": [float(vg[0]), float(vg[-1])]},
    }
    if "min_before_clamp" in meta:
        diagnostics["min_before_clamp"] = meta["min_before_clamp"]

    summary = RunSummary(cfg, obs, regime, warnings, diagnostics, predictions,
                         time.perf_counter() - start, fld)
    if write:
        _stage("output", write_outputs, summary, tau, chi)
    return summary


def write_outputs(summary: RunSummary, tau, chi) -> Path:
    cfg = summary.config
    out = Path(cfg.outputs.directory)
    formats = cfg.outputs.formats
    if "csv" in formats:
        write_atomic(out / "husimi.csv", husimi_csv(summary.field))
        write_atomic(out / "aperture.csv", aperture_csv(tau, chi))
    if "json" in formats:
        write_atomic(out / "summary.json", _json(summary.as_dict()))
        write_atomic(out / "timing.json", _json({"wall_clock_s": summary.wall_clock_s}))
        if summary.predictions is not None:
            write_atomic(out / "predictions.json", _json(summary.predictions))
    if "png" in formats:
        from absorbwave import report

        report.husimi_figure(summary.field, out / "husimi.png", title=_title(cfg))
        report.aperture_figure(tau, chi, out / "aperture.png", title=_title(cfg))
    return out


def _title(cfg: RunConfig) -> str:
    s = cfg.scenario
    return f"{s.name}, gamma = {s.gamma_per_s:g} 1/s, {s.state}"


def sweep_values(text: str):
    """Parse ``gamma=a:b:n`` into n evenly spaced values from a to b."""
    name, sep, rng = text.partition("=")
    if name.strip() != "gamma" or not sep:
        raise ValueError(f"sweep must look like gamma=a:b:n, got {text!r}")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValueError(f"sweep range must be a:b:n, got {rng!r}")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("sweep needs at least one value")
    return np.linspace(a, b, n) if n > 1 else np.array([a])


def sweep_row(gamma: float, summary: RunSummary | None) -> dict:
    if summary is None:
        return {c: ("" if c not in ("gamma_per_s", "exit_code") else None) for c in SWEEP_COLUMNS} | {
            "gamma_per_s": gamma, "exit_code": EXIT_ERROR}
    o = summary.observables
    return {"gamma_per_s": gamma, "peak_x_m": o.peak_x, "peak_v_mps": o.peak_v, "mean_x_m": o.mean_x,
            "mean_v_mps": o.mean_v, "disp_x_m": o.disp_x, "disp_v_mps": o.disp_v,
            "uncertainty_hbar": o.uncertainty, "transmission": o.transmission,
            "transmission_raw": o.transmission_raw, "n_modes": o.n_modes,
            "grid_mass_fraction": o.grid_mass_fraction, "exit_code": summary.exit_code}


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run_sweep(cfg: RunConfig, gammas, on_result=None):
    """Run one scenario per gamma into ``<directory>/gamma_<value>`` and write sweep.csv.

    Returns (rows, errors); a failing value is recorded and the sweep goes on.
    """
    base = Path(cfg.outputs.directory)
    rows, errors = [], {}
    for g in gammas:
        g = float(g)
        sub = cfg.with_values(scenario__gamma_per_s=g, outputs__directory=str(base / f"gamma_{g:g}"))
        try:
            summary = run_scenario(sub)
        except StageError as exc:
            summary = None
            errors[g] = str(exc)
        rows.append(sweep_row(g, summary))
        if on_result is not None:
            on_result(g, summary, errors.get(g))
    if "csv" in cfg.outputs.formats or "json" in cfg.outputs.formats:
        write_atomic(base / "sweep.csv", sweep_csv(rows))
    if "png" in cfg.outputs.formats:
        from absorbwave import report

        report.sweep_figure(rows, base / "sweep.png")
    return rows, errors
