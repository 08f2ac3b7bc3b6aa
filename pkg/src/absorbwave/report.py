"""PNG renderings of run results (matplotlib, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    fig.savefig(tmp, dpi=120, format="png", bbox_inches="tight")
    plt.close(fig)
    tmp.replace(path)
    return path


def husimi_figure(field, path, title: str = ""):
    """Husimi density over (x_tilde in mm, v_tilde in mm/s)."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    im = ax.pcolormesh(field.x_grid * 1e3, field.v_grid * 1e3, field.values.T, shading="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label="H")
    ax.set_xlabel("x_tilde [mm]")
    ax.set_ylabel("v_tilde [mm/s]")
    ax.set_title(title)
    return _save(fig, path)


def aperture_figure(tau, chi, path, title: str = ""):
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    ax.plot(np.asarray(tau) * 1e3, chi)
    ax.set_xlabel("tau [ms]")
    ax.set_ylabel("chi")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title(title)
    return _save(fig, path)


def sweep_figure(rows, path):
    """Uncertainty and transmission against gamma."""
    ok = [r for r in rows if r["exit_code"] != 1]
    g = np.array([r["gamma_per_s"] for r in ok], dtype=float)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.4))
    a1.plot(g, [r["uncertainty_hbar"] for r in ok], "o-")
    a1.set_xlabel("gamma [1/s]")
    a1.set_ylabel("dx m dv [hbar]")
    a2.plot(g, [r["transmission"] for r in ok], "o-")
    a2.set_xlabel("gamma [1/s]")
    a2.set_ylabel("transmission")
    fig.tight_layout()
    return _save(fig, path)
