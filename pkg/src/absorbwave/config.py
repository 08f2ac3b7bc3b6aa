"""Run configuration: a flat ``section.key = value`` text format with reference defaults."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from absorbwave.physics import (
    PAPER_DELTA_V, PAPER_MASS_U, PAPER_SIGMA, PAPER_T, PAPER_V0, PAPER_X0, SimulationWindow, WavePacketSpec,
)
from absorbwave.quadrature import QuadratureConfig

SCENARIOS = ("free", "shift", "split", "squeeze", "exponential", "custom")
STATES = ("pure", "thermal")
FORMATS = ("csv", "json", "png")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Particle:
    mass_u: float = PAPER_MASS_U


@dataclass(frozen=True)
class Packet:
    sigma_m: float = PAPER_SIGMA
    x0_m: float = PAPER_X0
    v0_mps: float = PAPER_V0
    dv_mps: float = PAPER_DELTA_V


@dataclass(frozen=True)
class Window:
    t_s: float = PAPER_T


@dataclass(frozen=True)
class Scenario:
    name: str = "free"
    gamma_per_s: float = 0.0
    state: str = "thermal"
    chi0: float | None = None
    table: str | None = None


@dataclass(frozen=True)
class Grid:
    nx: int = 161
    nv: int = 161
    x_min_m: float | None = None
    x_max_m: float | None = None
    v_min_mps: float | None = None
    v_max_mps: float | None = None
    workers: int = 1


@dataclass(frozen=True)
class Quadrature:
    rel_tol: float = 1e-8
    panels: int = 64
    nodes_per_panel: int = 16
    max_refinements: int = 6


@dataclass(frozen=True)
class Outputs:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    particle: Particle = field(default_factory=Particle)
    packet: Packet = field(default_factory=Packet)
    window: Window = field(default_factory=Window)
    scenario: Scenario = field(default_factory=Scenario)
    grid: Grid = field(default_factory=Grid)
    quadrature: Quadrature = field(default_factory=Quadrature)
    outputs: Outputs = field(default_factory=Outputs)

    def packet_spec(self) -> WavePacketSpec:
        dv = self.packet.dv_mps if self.scenario.state == "thermal" else 0.0
        return WavePacketSpec.from_amu(self.particle.mass_u, self.packet.sigma_m, self.packet.x0_m,
                                       self.packet.v0_mps, dv)

    def sim_window(self) -> SimulationWindow:
        return SimulationWindow(self.window.t_s)

    def quadrature_config(self) -> QuadratureConfig:
        q = self.quadrature
        return QuadratureConfig(q.panels, q.nodes_per_panel, q.rel_tol, q.max_refinements)

    def chi0(self) -> float:
        """Exponential prefactor; by default chosen so that chi peaks at exactly 1 on [0, t]."""
        if self.scenario.chi0 is not None:
            return self.scenario.chi0
        return math.exp(-max(self.scenario.gamma_per_s * self.window.t_s, 0.0))

    def with_values(self, **dotted) -> "RunConfig":
        """Copy with ``section__key=value`` overrides, revalidated."""
        items = {k.replace("__", "."): v for k, v in dotted.items()}
        return _build(_flatten(self) | {k: v for k, v in items.items()})

    def as_dict(self) -> dict:
        d = asdict(self)
        d["outputs"]["formats"] = list(self.outputs.formats)
        return d


_SECTION_TYPES = {"particle": Particle, "packet": Packet, "window": Window, "scenario": Scenario, "grid": Grid,
                  "quadrature": Quadrature, "outputs": Outputs}
KEYS = {f"{s}.{f.name}": f for s, cls in _SECTION_TYPES.items() for f in fields(cls)}
# bare leaf names that are unambiguous, plus the scenario name itself
_ALIASES = {"scenario": "scenario.name"}
for _k in KEYS:
    _leaf = _k.split(".", 1)[1]
    if sum(k.endswith("." + _leaf) for k in KEYS) == 1 and _leaf not in ("name",):
        _ALIASES.setdefault(_leaf, _k)


def _coerce(key: str, raw):
    """Turn a raw text value (or a Python value) into the field's type."""
    f = KEYS[key]
    default = f.default
    optional = "None" in str(f.type)
    if isinstance(raw, str):
        text = raw.strip()
        if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
            text = text[1:-1]
        if optional and text.lower() in ("", "none", "null"):
            return None
    else:
        if raw is None:
            if optional:
                return None
            raise ConfigError(key, "value required")
        text = raw
    if key == "outputs.formats":
        items = text.split(",") if isinstance(text, str) else list(text)
        items = tuple(s.strip() for s in items if str(s).strip())
        bad = [s for s in items if s not in FORMATS]
        if bad:
            raise ConfigError(key, f"unknown format(s) {bad}; choose from {list(FORMATS)}")
        return items
    kind = type(default) if default is not None else float
    if key in ("scenario.table",):
        kind = str
    try:
        if kind is int:
            if isinstance(text, str):
                value = int(text, 10)
            elif isinstance(text, bool) or int(text) != text:
                raise ValueError
            else:
                value = int(text)
        elif kind is float:
            value = float(text)
        else:
            value = str(text)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {kind.__name__}, got {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(key, f"must be finite, got {raw!r}")
    return value


def _check(key: str, ok: bool, message: str):
    if not ok:
        raise ConfigError(key, message)


def _validate(cfg: RunConfig) -> None:
    p, pk, s, g = cfg.particle, cfg.packet, cfg.scenario, cfg.grid
    _check("particle.mass_u", p.mass_u > 0, f"must be positive, got {p.mass_u}")
    _check("packet.sigma_m", pk.sigma_m > 0, f"must be positive, got {pk.sigma_m}")
    _check("packet.x0_m", pk.x0_m < 0, f"packet must start before the barrier (x0 < 0), got {pk.x0_m}")
    _check("packet.v0_mps", pk.v0_mps > 0, f"must be positive (towards the barrier), got {pk.v0_mps}")
    _check("packet.dv_mps", pk.dv_mps >= 0, f"must be non-negative, got {pk.dv_mps}")
    _check("window.t_s", cfg.window.t_s > 0, f"must be positive, got {cfg.window.t_s}")
    _check("window.t_s", abs(pk.x0_m) / pk.v0_mps < cfg.window.t_s,
           f"classical arrival time {abs(pk.x0_m) / pk.v0_mps:g} s must be shorter than t = {cfg.window.t_s:g} s")
    _check("scenario.name", s.name in SCENARIOS, f"unknown scenario {s.name!r}; choose from {list(SCENARIOS)}")
    _check("scenario.state", s.state in STATES, f"must be one of {list(STATES)}, got {s.state!r}")
    if s.chi0 is not None:
        _check("scenario.chi0", s.chi0 >= 0, f"must be non-negative, got {s.chi0}")
        if s.name == "exponential":
            peak = s.chi0 * math.exp(max(s.gamma_per_s * cfg.window.t_s, 0.0))
            _check("scenario.chi0", peak <= 1 + 1e-12, f"transparency reaches {peak:.6g} > 1 within [0, t]")
    _check("scenario.table", s.name != "custom" or s.table is not None, "custom scenario needs a table path")
    if s.name == "squeeze":
        _check("scenario.gamma_per_s", s.gamma_per_s >= 0, f"squeeze rate must be non-negative, got {s.gamma_per_s}")
    _check("grid.nx", g.nx >= 3, f"need at least 3 points, got {g.nx}")
    _check("grid.nv", g.nv >= 3, f"need at least 3 points, got {g.nv}")
    _check("grid.workers", g.workers >= 1, f"must be at least 1, got {g.workers}")
    for lo, hi in (("x_min_m", "x_max_m"), ("v_min_mps", "v_max_mps")):
        a, b = getattr(g, lo), getattr(g, hi)
        _check(f"grid.{lo}", (a is None) == (b is None), f"give both grid.{lo} and grid.{hi} or neither")
        if a is not None:
            _check(f"grid.{hi}", b > a, f"must exceed grid.{lo} ({a}), got {b}")
    if g.x_min_m is not None:
        _check("grid.x_min_m", g.x_min_m > 0, f"probes must lie past the barrier (x > 0), got {g.x_min_m}")
    if g.v_min_mps is not None:
        _check("grid.v_min_mps", g.v_min_mps > 0 or g.v_max_mps < 0, "velocity window must not contain 0")
    try:
        cfg.quadrature_config()
    except ValueError as exc:
        key = next((f"quadrature.{f.name}" for f in fields(Quadrature) if f.name in str(exc)), "quadrature")
        raise ConfigError(key, str(exc)) from None
    _check("outputs.directory", bool(cfg.outputs.directory.strip()), "must not be empty")


def _build(flat: dict) -> RunConfig:
    sections = {name: {} for name in _SECTION_TYPES}
    for key, raw in flat.items():
        section, leaf = key.split(".", 1)
        sections[section][leaf] = _coerce(key, raw)
    cfg = RunConfig(**{name: _SECTION_TYPES[name](**vals) for name, vals in sections.items()})
    _validate(cfg)
    return cfg


def _canonical_key(key: str, line: int | None = None) -> str:
    where = f" (line {line})" if line is not None else ""
    if key in KEYS:
        return key
    if key in _ALIASES:
        return _ALIASES[key]
    raise ConfigError(key, f"unknown key{where}")


def from_mapping(values: dict) -> RunConfig:
    """Build a config from ``{dotted_key: value}``; bare leaf names are accepted when unambiguous."""
    flat = {}
    for k, v in values.items():
        flat[_canonical_key(k)] = v
    return _build(flat)


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment.

    Omitted keys take the reference defaults. Unknown or repeated keys and
    invalid values raise ConfigError naming the key.
    """
    flat = {}
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        sep = min((i for i in (body.find("="), body.find(":")) if i >= 0), default=-1)
        if sep <= 0:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {line.strip()!r}")
        key = _canonical_key(body[:sep].strip(), n)
        if key in flat:
            raise ConfigError(key, f"given twice (line {n})")
        flat[key] = body[sep + 1:]
    return _build(flat)


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(value)
    return str(value)


def _flatten(cfg: RunConfig) -> dict:
    out = {}
    for section in _SECTION_TYPES:
        sub = getattr(cfg, section)
        for f in fields(sub):
            out[f"{section}.{f.name}"] = getattr(sub, f.name)
    return out


def serialize(cfg: RunConfig) -> str:
    """Canonical text form; floats use repr so that parsing returns an equal config."""
    lines, current = [], None
    for key, value in _flatten(cfg).items():
        section = key.split(".", 1)[0]
        if section != current:
            if current is not None:
                lines.append("")
            current = section
        lines.append(f"{key} = {_format(value)}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
