"""Scenario files: loading, validation against the data hypotheses, echo.

A scenario is an INI-style file with sections ``[grid]``, ``[physics]``,
``[density]``, ``[kernel]``, ``[yield_grid]``, ``[forcing]``, ``[initial]``,
``[output]`` and ``[run]``.  Expressions are double-quoted strings in the
grammar of :mod:`beamfatigue.expressions`.  See README for the full list
of keys.
"""
from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .beam import PhysicalParams
from .expressions import ExpressionError, parse_expression
from .phase_fatigue import BumpKernel, RecoveryFunction
from .prandtl_ishlinskii import (AtomicDensity, DensityModel, ExponentialDensity,
                                 InvalidDensity, make_yield_grid)

_LATTICE_X = 65
_LATTICE_T = 33


class ConfigError(ValueError):
    """Raised with every violated clause, not just the first one."""

    def __init__(self, problems: list[str], source: str = "<config>"):
        self.problems = list(problems)
        self.source = source
        super().__init__(f"{source}: " + "; ".join(self.problems))


@dataclass(frozen=True)
class SimulationConfig:
    n: int = 32
    dt: float = 1e-3
    T: float = 1.0
    snapshot_interval: float = 0.05
    params: PhysicalParams = field(default_factory=PhysicalParams)
    density_kind: str = "exponential"
    density_amplitude: float = 1.0
    density_yield_scale: float = 1.0
    density_fatigue_scale: float = 1.0
    density_radius: float = 1.0
    kernel_amplitude: float = 1.0
    kernel_halfwidth: float = 0.1
    yield_count: int = 88
    yield_tail_tol: float = 1e-8
    f: str = "0"
    g: str = "0"
    g_theta_bound: float | None = None
    theta0: str = "1"
    chi0: str = "0"
    output_dir: str = "out"
    plots: bool = True
    threads: int = 1
    name: str = "scenario"

    # -- derived model objects -------------------------------------------------

    def density(self) -> DensityModel:
        kind = self.density_kind
        if kind == "exponential":
            return ExponentialDensity(self.density_amplitude, self.density_yield_scale,
                                      self.density_fatigue_scale)
        if kind == "fatigue_independent":
            return ExponentialDensity(self.density_amplitude, self.density_yield_scale, None)
        if kind == "atomic":
            return AtomicDensity(self.density_radius, self.density_amplitude,
                                 self.density_fatigue_scale)
        raise ConfigError([f"density: unknown density kind {kind!r}"])

    def yield_grid(self):
        return make_yield_grid(self.density(), self.yield_count, self.yield_tail_tol)

    def kernel(self) -> BumpKernel:
        return BumpKernel(self.kernel_amplitude, self.kernel_halfwidth)

    def recovery(self) -> RecoveryFunction:
        return RecoveryFunction(self.params.a, self.params.b)

    def f_expr(self):
        return parse_expression(self.f, ("x", "t"))

    def g_expr(self):
        return parse_expression(self.g, ("theta", "x", "t"))

    def theta0_expr(self):
        return parse_expression(self.theta0, ("x",))

    def chi0_expr(self):
        return parse_expression(self.chi0, ("x",))

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def snapshot_every(self) -> int:
        return max(1, int(round(self.snapshot_interval / self.dt)))

    def g_lipschitz(self) -> float:
        """Declared bound on ``|g_theta|``, else an estimate on the validation lattice."""
        if self.g_theta_bound is not None:
            return self.g_theta_bound
        return _estimate_g_lipschitz(self)

    def with_(self, **changes) -> "SimulationConfig":
        pchanges = {k: changes.pop(k) for k in list(changes) if k in PhysicalParams.__dataclass_fields__}
        cfg = replace(self, **changes)
        if pchanges:
            cfg = replace(cfg, params=replace(cfg.params, **pchanges))
        return cfg

    # -- validation ------------------------------------------------------------

    def problems(self) -> list[str]:
        out: list[str] = []
        out += _grid_problems(self)
        try:
            dens = self.density()
            out += _density_problems(dens)
            M = dens.M
        except (InvalidDensity, ConfigError) as exc:
            out.append(f"density: {exc}")
            M = math.inf
        out += self.params.violations(M)
        if not self.kernel_amplitude >= 0 or not self.kernel_halfwidth > 0:
            out.append("kernel: kernel needs amplitude >= 0 and halfwidth > 0")
        out += _expression_problems(self)
        return out

    def validate(self) -> "SimulationConfig":
        probs = self.problems()
        if probs:
            raise ConfigError(probs, self.name)
        return self

    # -- serialisation ---------------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["grid"] = {"n": str(self.n), "dt": repr(self.dt), "T": repr(self.T),
                      "snapshot_interval": repr(self.snapshot_interval)}
        cp["physics"] = {k: repr(float(v)) for k, v in self.params.as_dict().items()}
        cp["density"] = {"kind": self.density_kind, "amplitude": repr(self.density_amplitude),
                         "yield_scale": repr(self.density_yield_scale),
                         "fatigue_scale": "none" if self.density_fatigue_scale is None
                         else repr(self.density_fatigue_scale),
                         "radius": repr(self.density_radius)}
        cp["kernel"] = {"amplitude": repr(self.kernel_amplitude),
                        "halfwidth": repr(self.kernel_halfwidth)}
        cp["yield_grid"] = {"count": str(self.yield_count), "tail_tol": repr(self.yield_tail_tol)}
        forcing = {"f": _quote(self.f), "g": _quote(self.g)}
        if self.g_theta_bound is not None:
            forcing["g_theta_bound"] = repr(self.g_theta_bound)
        cp["forcing"] = forcing
        cp["initial"] = {"theta0": _quote(self.theta0), "chi0": _quote(self.chi0)}
        cp["output"] = {"directory": self.output_dir, "plots": "true" if self.plots else "false"}
        cp["run"] = {"name": self.name, "threads": str(self.threads)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def as_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = v.as_dict() if isinstance(v, PhysicalParams) else v
        return d


def _quote(s: str) -> str:
    return '"' + s + '"'


def _unquote(s: str) -> str:
    s = s.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


def _grid_problems(cfg: SimulationConfig) -> list[str]:
    out = []
    if int(cfg.n) != cfg.n or cfg.n < 2:
        out.append(f"grid: n = {cfg.n} must be an integer >= 2")
    if not (np.isfinite(cfg.dt) and cfg.dt > 0):
        out.append(f"grid: dt = {cfg.dt} must be positive")
        return out
    if not (np.isfinite(cfg.T) and cfg.T >= 0):
        out.append(f"grid: T = {cfg.T} must be nonnegative")
    elif abs(cfg.T / cfg.dt - round(cfg.T / cfg.dt)) > 1e-9 * max(1.0, cfg.T / cfg.dt):
        out.append(f"grid: horizon T = {cfg.T} is not a whole number of steps dt = {cfg.dt}")
    if not cfg.snapshot_interval > 0:
        out.append("grid: snapshot_interval must be positive")
    else:
        k = cfg.snapshot_interval / cfg.dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k) or round(k) < 1:
            out.append("grid: snapshot_interval must be a whole multiple of dt")
    if cfg.yield_count < 1:
        out.append("yield_grid: count must be >= 1")
    if not cfg.yield_tail_tol > 0:
        out.append("yield_grid: tail_tol must be > 0")
    if cfg.threads < 1:
        out.append("run: threads must be >= 1")
    return out


def _density_problems(dens: DensityModel) -> list[str]:
    out = []
    mt, M = dens.M_tilde, dens.M
    if not np.isfinite(mt):
        out.append("density: M_tilde = int r phi_tilde dr is not finite")
    if not np.isfinite(M):
        out.append("density: M = int r^2 phi_star dr is not finite")
    if dens.atomic:
        r = np.array([dens.radius])
    else:
        r = np.linspace(1e-3, 30.0, 200)
    m = np.linspace(0.0, 20.0, 41)[:, None]
    phi, phim, pt, ps = dens.phi(m, r), dens.phi_m(m, r), dens.phi_tilde(r), dens.phi_star(r)
    if np.any(phi < 0):
        out.append("density: phi takes negative values")
    if np.any(phi > pt * (1 + 1e-12)):
        out.append("density: phi exceeds phi_tilde")
    if np.any(phim > 0) or np.any(-phim > ps * (1 + 1e-12)):
        out.append("density: phi_m outside [-phi_star, 0]")
    return out


def _lattice(cfg: SimulationConfig):
    x = np.linspace(0.0, 1.0, _LATTICE_X)
    t = np.linspace(0.0, cfg.T, _LATTICE_T) if cfg.T > 0 else np.array([0.0])
    return x, t


def _theta_range(cfg: SimulationConfig) -> np.ndarray:
    hi = 4.0 * max(cfg.params.theta_c, 1.0)
    try:
        th0 = np.asarray(cfg.theta0_expr()(np.linspace(0, 1, _LATTICE_X)), dtype=float)
        if np.all(np.isfinite(th0)):
            hi = max(hi, 4.0 * float(np.max(th0)))
    except ExpressionError:
        pass
    return np.linspace(0.0, hi, 33)


def _estimate_g_lipschitz(cfg: SimulationConfig) -> float:
    x, t = _lattice(cfg)
    th = _theta_range(cfg)
    g = cfg.g_expr()
    vals = np.broadcast_to(np.asarray(g(th[:, None, None], x[None, :, None], t[None, None, :]),
                                      dtype=float), (len(th), len(x), len(t)))
    slopes = np.abs(np.diff(vals, axis=0)) / np.diff(th)[:, None, None]
    return float(np.max(slopes))


def _expression_problems(cfg: SimulationConfig) -> list[str]:
    out = []
    x, t = _lattice(cfg)
    X, Tt = x[:, None], t[None, :]
    parsed = {}
    for key, vars_ in (("f", ("x", "t")), ("g", ("theta", "x", "t")),
                       ("theta0", ("x",)), ("chi0", ("x",))):
        try:
            parsed[key] = parse_expression(getattr(cfg, key), vars_)
        except ExpressionError as exc:
            out.append(f"expression {key}: {exc}")
    if "f" in parsed:
        fv = np.broadcast_to(np.asarray(parsed["f"](X, Tt), dtype=float), (len(x), len(t)))
        if not np.all(np.isfinite(fv)):
            out.append("load: load f is not finite on the validation lattice")
    if "theta0" in parsed:
        th = np.broadcast_to(np.asarray(parsed["theta0"](x), dtype=float), x.shape)
        if not np.all(np.isfinite(th)):
            out.append("initial: theta0 is not finite on the validation lattice")
        elif np.any(th < cfg.params.theta_floor):
            out.append(f"initial: theta0 falls below theta_floor = {cfg.params.theta_floor} "
                       f"(min {float(np.min(th))})")
    if "chi0" in parsed:
        ch = np.broadcast_to(np.asarray(parsed["chi0"](x), dtype=float), x.shape)
        if not np.all(np.isfinite(ch)) or np.any(ch < 0) or np.any(ch > 1):
            out.append("initial: chi0 leaves [0, 1] on the validation lattice")
    if "g" in parsed:
        g0 = np.broadcast_to(np.asarray(parsed["g"](0.0, X, Tt), dtype=float), (len(x), len(t)))
        if not np.all(np.isfinite(g0)):
            out.append("heat source: g(0, x, t) is not finite on the validation lattice")
        elif np.any(g0 < 0):
            out.append(f"heat source: g(0, x, t) < 0 somewhere (min {float(np.min(g0))})")
        if cfg.g_theta_bound is not None and not out:
            est = _estimate_g_lipschitz(cfg)
            if not np.isfinite(est) or est > cfg.g_theta_bound * (1 + 1e-9) + 1e-12:
                out.append(f"heat source: |g_theta| reaches {est} > g_theta_bound = {cfg.g_theta_bound}")
    return out


def _get(cp, section, key, conv, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError([f"[{section}] {key}: cannot read {raw!r} ({exc})"]) from None


def _opt_float(raw: str):
    return None if raw.strip().lower() in ("none", "") else float(raw)


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


_KNOWN_KEYS = {
    "grid": {"n", "dt", "T", "snapshot_interval"},
    "physics": set(PhysicalParams().as_dict()),
    "density": {"kind", "amplitude", "yield_scale", "fatigue_scale", "radius"},
    "kernel": {"amplitude", "halfwidth"},
    "yield_grid": {"count", "tail_tol"},
    "forcing": {"f", "g", "g_theta_bound"},
    "initial": {"theta0", "chi0"},
    "output": {"directory", "plots"},
    "run": {"name", "threads"},
}


def _unknown_keys(cp) -> list[str]:
    out = []
    for section in cp.sections():
        known = _KNOWN_KEYS.get(section)
        if known is None:
            out.append(f"unknown section [{section}]")
            continue
        out += [f"[{section}] unknown key {k!r}" for k in cp[section] if k not in known]
    return out


def parse_config_text(text: str, name: str = "scenario", validate: bool = True) -> SimulationConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"], name) from None
    unknown = _unknown_keys(cp)
    if unknown:
        raise ConfigError(unknown, name)
    d = SimulationConfig()
    pdef = PhysicalParams()
    params = PhysicalParams(**{k: _get(cp, "physics", k, float, getattr(pdef, k))
                               for k in pdef.as_dict()})
    cfg = SimulationConfig(
        n=_get(cp, "grid", "n", int, d.n),
        dt=_get(cp, "grid", "dt", float, d.dt),
        T=_get(cp, "grid", "T", float, d.T),
        snapshot_interval=_get(cp, "grid", "snapshot_interval", float, d.snapshot_interval),
        params=params,
        density_kind=_get(cp, "density", "kind", str.strip, d.density_kind),
        density_amplitude=_get(cp, "density", "amplitude", float, d.density_amplitude),
        density_yield_scale=_get(cp, "density", "yield_scale", float, d.density_yield_scale),
        density_fatigue_scale=_get(cp, "density", "fatigue_scale", _opt_float, d.density_fatigue_scale),
        density_radius=_get(cp, "density", "radius", float, d.density_radius),
        kernel_amplitude=_get(cp, "kernel", "amplitude", float, d.kernel_amplitude),
        kernel_halfwidth=_get(cp, "kernel", "halfwidth", float, d.kernel_halfwidth),
        yield_count=_get(cp, "yield_grid", "count", int, d.yield_count),
        yield_tail_tol=_get(cp, "yield_grid", "tail_tol", float, d.yield_tail_tol),
        f=_get(cp, "forcing", "f", _unquote, d.f),
        g=_get(cp, "forcing", "g", _unquote, d.g),
        g_theta_bound=_get(cp, "forcing", "g_theta_bound", _opt_float, d.g_theta_bound),
        theta0=_get(cp, "initial", "theta0", _unquote, d.theta0),
        chi0=_get(cp, "initial", "chi0", _unquote, d.chi0),
        output_dir=_get(cp, "output", "directory", str.strip, d.output_dir),
        plots=_get(cp, "output", "plots", _bool, d.plots),
        threads=_get(cp, "run", "threads", int, d.threads),
        name=_get(cp, "run", "name", str.strip, name),
    )
    env_threads = os.environ.get("SIM_THREADS")
    if env_threads:
        try:
            cfg = replace(cfg, threads=int(env_threads))
        except ValueError:
            raise ConfigError([f"SIM_THREADS={env_threads!r} is not an integer"]) from None
    return cfg.validate() if validate else cfg


def load_config(path, validate: bool = True) -> SimulationConfig:
    path = Path(path)
    text = path.read_text()
    try:
        return parse_config_text(text, name=path.stem, validate=validate)
    except ConfigError as exc:
        exc.source = str(path)
        raise


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def shipped_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(SCENARIO_DIR.glob("*.cfg"))}
