"""Declarative run configuration.

A run is described by one TOML file (grid, potential, scheme, dyadic
depth, tolerances, and a list of experiments). The parsed configuration
re-serializes to canonical JSON — sorted keys, compact separators — and
the sha256 of that string is the config hash embedded in report file
names, so identical configs yield identical artifacts on any platform.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field as dc_field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:                              # pragma: no cover - version shim
    import tomli as tomllib

from .dyadic import DyadicSystem, build_dyadic_system, required_j_max
from .hamiltonian import SCHEMES, Hamiltonian, assemble
from .lattice import Field, Grid, PotentialSpec, gaussian_packet, load_field, make_grid

EXPERIMENT_TYPES = ("short-time", "long-time", "dispersive", "corollary",
                    "lemma-theta", "dyadic-split")


def canonical_json(data) -> str:
    """Deterministic serialization: sorted keys, no whitespace, ASCII."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def content_hash(data) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


class ConfigError(ValueError):
    """Malformed configuration; message carries the [section].key path."""


def _get(table: dict, section: str, key: str, kinds, default=None,
         required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] is missing required key {key!r}")
        return default
    val = table[key]
    if kinds is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kinds) or isinstance(val, bool) and kinds is not bool:
        raise ConfigError(
            f"[{section}].{key}: expected {getattr(kinds, '__name__', kinds)},"
            f" got {type(val).__name__}")
    return val


def _float_list(table: dict, section: str, key: str, default=None):
    raw = table.get(key, default)
    if raw is None:
        return None
    if not isinstance(raw, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in raw):
        raise ConfigError(f"[{section}].{key}: expected a list of numbers")
    return [float(v) for v in raw]


def _exponent(table: dict, section: str, key: str, default=None,
              required=False):
    raw = table.get(key, default)
    if raw is None:
        if required:
            raise ConfigError(f"[{section}] is missing required key {key!r}")
        return None
    if raw == "inf":
        return math.inf
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise ConfigError(f"[{section}].{key}: expected a number or 'inf'")


def resolve_times(spec, section: str) -> list:
    """A times entry is either an explicit list or
    {start, stop, count, spacing = "log" | "linear"}."""
    if isinstance(spec, list):
        times = _float_list({"times": spec}, section, "times")
        if not times:
            raise ConfigError(f"[{section}].times: empty list")
        return times
    if isinstance(spec, dict):
        start = _get(spec, f"{section}.times", "start", float, required=True)
        stop = _get(spec, f"{section}.times", "stop", float, required=True)
        count = _get(spec, f"{section}.times", "count", int, required=True)
        spacing = _get(spec, f"{section}.times", "spacing", str, default="log")
        if count < 1:
            raise ConfigError(f"[{section}].times.count: must be >= 1")
        if spacing == "log":
            if start <= 0:
                raise ConfigError(
                    f"[{section}].times.start: log spacing needs start > 0")
            return [float(v) for v in np.geomspace(start, stop, count)]
        if spacing == "linear":
            return [float(v) for v in np.linspace(start, stop, count)]
        raise ConfigError(
            f"[{section}].times.spacing: 'log' or 'linear', got {spacing!r}")
    raise ConfigError(f"[{section}].times: expected a list or a table")


@dataclass(frozen=True)
class FieldSpec:
    """Initial-data description: a Gaussian packet or a stored field."""

    kind: str                      # "gaussian" | "file"
    center: tuple = ()
    width: float = 1.0
    momentum: tuple = ()
    path: str | None = None

    def build(self, grid: Grid) -> Field:
        if self.kind == "gaussian":
            center = self.center if self.center else (0.0,) * grid.dim
            momentum = self.momentum if self.momentum else (0.0,) * grid.dim
            return gaussian_packet(grid, center, self.width, momentum)
        return load_field(grid, self.path)

    def describe(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "center": list(self.center),
                    "width": self.width, "momentum": list(self.momentum)}
        return {"kind": "file", "path": self.path}


def _parse_field(table: dict, section: str) -> FieldSpec:
    kind = _get(table, section, "kind", str, default="gaussian")
    if kind == "gaussian":
        center = _float_list(table, section, "center") or ()
        momentum = _float_list(table, section, "momentum") or ()
        width = _get(table, section, "width", float, default=1.0)
        if not width > 0:
            raise ConfigError(f"[{section}].width: must be positive")
        return FieldSpec("gaussian", tuple(center), width, tuple(momentum))
    if kind == "file":
        path = _get(table, section, "path", str, required=True)
        return FieldSpec("file", path=path)
    raise ConfigError(f"[{section}].kind: 'gaussian' or 'file', got {kind!r}")


def _echo_exponent(x: float):
    # the inverse of _exponent: JSON has no infinity, so echo the same
    # "inf" string the parser accepts
    return "inf" if math.isinf(x) else x


@dataclass(frozen=True)
class ExperimentConfig:
    type: str
    field: FieldSpec
    p: float = 2.0
    q: float = 2.0
    alpha: float = 0.0
    times: tuple = (1.0,)
    fit_window: tuple | None = None
    rhs_variant: str = "B2beta_q1"
    space: str = "B"
    thetas: tuple | None = None
    label: str = "experiment"

    def describe(self) -> dict:
        d = {"type": self.type, "field": self.field.describe(),
             "p": _echo_exponent(self.p), "times": list(self.times),
             "label": self.label}
        if self.type == "corollary":
            d.update(q=_echo_exponent(self.q), alpha=self.alpha,
                     space=self.space)
        if self.type == "long-time":
            d["rhs_variant"] = self.rhs_variant
        if self.type == "lemma-theta":
            d["thetas"] = list(self.thetas or ())
        if self.fit_window is not None:
            d["fit_window"] = list(self.fit_window)
        return d


def _parse_experiment(table: dict, i: int) -> ExperimentConfig:
    section = f"experiment[{i}]"
    etype = _get(table, section, "type", str, required=True)
    if etype not in EXPERIMENT_TYPES:
        raise ConfigError(f"[{section}].type: unknown experiment type "
                          f"{etype!r}; expected one of {EXPERIMENT_TYPES}")
    fspec = _parse_field(table.get("field", {}), f"{section}.field")
    p = _exponent(table, section, "p", default=2.0)
    q = _exponent(table, section, "q", default=2.0)
    alpha = _get(table, section, "alpha", float, default=0.0)
    if "times" not in table:
        raise ConfigError(f"[{section}] is missing required key 'times'")
    times = resolve_times(table["times"], section)
    window = _float_list(table, section, "fit_window")
    if window is not None and len(window) != 2:
        raise ConfigError(f"[{section}].fit_window: expected [lo, hi]")
    thetas = _float_list(table, section, "thetas")
    return ExperimentConfig(
        etype, fspec, p, q, alpha, tuple(times),
        tuple(window) if window else None,
        _get(table, section, "rhs_variant", str, default="B2beta_q1"),
        _get(table, section, "space", str, default="B"),
        tuple(thetas) if thetas else None,
        _get(table, section, "label", str, default=f"experiment-{i}"))


@dataclass(frozen=True)
class RunConfig:
    dim: int
    extent: float
    points_per_axis: int
    scheme: str
    potential: PotentialSpec
    j_max: int | None
    seed: int
    threads: int
    out_dir: str
    window_tol: float
    phase_tol: float
    experiments: tuple = dc_field(default_factory=tuple)

    # -- realization ------------------------------------------------------

    def build_grid(self) -> Grid:
        return make_grid(self.dim, self.extent, self.points_per_axis)

    def build_hamiltonian(self) -> Hamiltonian:
        return assemble(self.build_grid(), self.potential, self.scheme)

    def build_system(self, h: Hamiltonian) -> DyadicSystem:
        if self.j_max is not None:
            return build_dyadic_system(self.j_max)
        lo, hi = h.enclosure
        return build_dyadic_system(required_j_max(max(hi, -lo)))

    # -- canonical echo ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "grid": {"dim": self.dim, "extent": self.extent,
                     "points_per_axis": self.points_per_axis},
            "potential": self.potential.describe(),
            "operator": {"scheme": self.scheme, "j_max": self.j_max},
            "run": {"seed": self.seed, "threads": self.threads,
                    "out": self.out_dir},
            "tolerances": {"window": self.window_tol,
                           "phase": self.phase_tol},
            "experiments": [e.describe() for e in self.experiments],
        }

    def hash(self) -> str:
        return content_hash(self.to_dict())


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None

    grid = data.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("config needs a [grid] table")
    dim = _get(grid, "grid", "dim", int, required=True)
    extent = _get(grid, "grid", "extent", float, required=True)
    points = _get(grid, "grid", "points_per_axis", int, required=True)
    if dim not in (1, 2, 3):
        raise ConfigError("[grid].dim: expected 1, 2, or 3")
    if extent <= 0.0:
        raise ConfigError("[grid].extent: must be positive")
    if points < 4:
        raise ConfigError("[grid].points_per_axis: must be >= 4")

    pot_table = data.get("potential", {"kind": "zero"})
    if not isinstance(pot_table, dict):
        raise ConfigError("[potential] must be a table")
    kind = _get(pot_table, "potential", "kind", str, default="zero")
    center = tuple(_float_list(pot_table, "potential", "center") or ())
    if kind == "zero":
        potential = PotentialSpec.zero()
    elif kind == "gaussian_well":
        potential = PotentialSpec.gaussian_well(
            _get(pot_table, "potential", "depth", float, required=True),
            _get(pot_table, "potential", "width", float, required=True),
            center)
    elif kind == "ball":
        potential = PotentialSpec.ball(
            _get(pot_table, "potential", "height", float, required=True),
            _get(pot_table, "potential", "radius", float, required=True),
            center)
    elif kind == "smooth_bump":
        potential = PotentialSpec.smooth_bump(
            _get(pot_table, "potential", "height", float, required=True),
            _get(pot_table, "potential", "radius", float, required=True),
            center)
    elif kind == "from_file":
        potential = PotentialSpec.from_file(
            _get(pot_table, "potential", "path", str, required=True))
    else:
        raise ConfigError(f"[potential].kind: unknown kind {kind!r}")

    op = data.get("operator", {})
    scheme = _get(op, "operator", "scheme", str, default="fourier")
    if scheme not in SCHEMES:
        raise ConfigError(f"[operator].scheme: expected one of {SCHEMES}, "
                          f"got {scheme!r}")
    j_max = _get(op, "operator", "j_max", int, default=None)
    if j_max is not None and j_max < 1:
        raise ConfigError("[operator].j_max: must be >= 1")

    run = data.get("run", {})
    seed = _get(run, "run", "seed", int, default=0)
    threads = _get(run, "run", "threads", int, default=1)
    out_dir = _get(run, "run", "out", str, default="reports")

    tols = data.get("tolerances", {})
    window_tol = _get(tols, "tolerances", "window", float, default=1e-10)
    phase_tol = _get(tols, "tolerances", "phase", float, default=1e-12)
    if not (window_tol > 0 and phase_tol > 0):
        raise ConfigError("[tolerances]: tolerances must be positive")

    raw_exps = data.get("experiment", [])
    if isinstance(raw_exps, dict):
        raw_exps = [raw_exps]
    if not isinstance(raw_exps, list):
        raise ConfigError("[[experiment]] must be an array of tables")
    experiments = tuple(_parse_experiment(t, i)
                        for i, t in enumerate(raw_exps))

    try:
        cfg = RunConfig(dim, extent, points, scheme, potential, j_max,
                        seed, threads, out_dir, window_tol, phase_tol,
                        experiments)
        cfg.build_grid()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
