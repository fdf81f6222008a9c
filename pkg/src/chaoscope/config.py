"""Experiment configuration: INI files with one schema per experiment kind.

A config has three sections::

    [experiment]
    kind = ymh_poincare
    name = fig3
    seed_grid = 8x8

    [params]
    g = 1.0
    v = 1.0, 1.1, 1.2
    energy = 10.0

    [numerics]
    t_end = 1000.0

Unknown sections or keys are rejected. Missing ``[numerics]`` keys take the
kind's defaults; ``[params]`` keys without a default are required.
"""
from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .inflaton import HubbleVariant, InflatonParams
from .ymh_classical import YmhParams

__all__ = ["KINDS", "ExperimentConfig", "SeedGridSpec", "parse_seed_grid", "load_config", "parse_config"]

REQUIRED = object()


@dataclass(frozen=True)
class _Field:
    kind: str  # float | int | str | floats | variant | method | scheme
    default: object = REQUIRED


def _f(default=REQUIRED):
    return _Field("float", default)


def _i(default=REQUIRED):
    return _Field("int", default)


_INFLATON_PARAMS = {
    "lam": _f(),
    "v": _f(),
    "gamma": _f(None),
    "G": _f(None),
    "hubble_variant": _Field("variant", "abs_plus"),
    "phi0": _f(),
    "chi0": _f(),
}
_SPECTRUM_NUMERICS = {
    "L": _i(100),
    "rel_tol": _f(1e-8),
    "start": _i(30),
    "increment": _i(16),
    "max_dim": _i(5000),
}

SCHEMAS = {
    "inflaton_trajectory": (
        _INFLATON_PARAMS,
        {"t_end": _f(200.0), "step": _f(1e-2), "record_every": _i(10), "scheme": _Field("scheme", "rk4")},
    ),
    "inflaton_cycle": (
        _INFLATON_PARAMS,
        {
            "settle_time": _f(50.0),
            "observe_time": _f(50.0),
            "step": _f(1e-2),
            "record_every": _i(5),
            "rel_tol": _f(1e-4),
        },
    ),
    "ymh_poincare": (
        {"g": _f(), "v": _Field("floats"), "energy": _f()},
        {
            "t_end": _f(1000.0),
            "step": _f(1e-3),
            "max_points": _i(100_000),
            "lyapunov_horizon": _f(0.0),
            "renorm_interval": _f(1.0),
        },
    ),
    "ymh_spectrum": ({"g": _f(), "v": _Field("floats"), "omega": _f(None)}, dict(_SPECTRUM_NUMERICS)),
    "ymh_pstats": (
        {"g": _f(), "v": _Field("floats"), "omega": _f(None)},
        {**_SPECTRUM_NUMERICS, "degree": _i(6), "method": _Field("method", "mle")},
    ),
    "curvature_report": ({"g": _Field("floats"), "v": _Field("floats"), "energy": _f(None)}, {}),
}
KINDS = tuple(SCHEMAS)
_EXPERIMENT_KEYS = {"kind", "name", "output_dir", "seed_grid"}


# ---------------------------------------------------------------- seed grid


@dataclass(frozen=True)
class SeedGridSpec:
    n_radial: int = 8
    n_angular: int = 8
    r_max: float = 0.94

    def __str__(self) -> str:
        return f"{self.n_radial}x{self.n_angular}@{self.r_max!r}"


_GRID_RE = re.compile(r"^\s*(\d+)\s*x\s*(\d+)\s*(?:@\s*([0-9.eE+-]+))?\s*$")


def parse_seed_grid(spec: str) -> SeedGridSpec:
    """``"NRxNA"`` or ``"NRxNA@rmax"`` (radial x angular cells, max radius fraction)."""
    m = _GRID_RE.match(spec)
    if not m:
        raise ConfigError(f"bad seed grid {spec!r}; expected e.g. '8x8' or '8x8@0.94'")
    nr, na = int(m.group(1)), int(m.group(2))
    r_max = float(m.group(3)) if m.group(3) else SeedGridSpec.r_max
    if nr < 1 or na < 1 or not 0 < r_max < 1:
        raise ConfigError(f"seed grid {spec!r} out of range")
    return SeedGridSpec(nr, na, r_max)


# ---------------------------------------------------------------- values


def _parse_value(kind: str, text: str, where: str):
    text = text.strip()
    try:
        if kind == "float":
            x = float(text)
            if not math.isfinite(x):
                raise ValueError
            return x
        if kind == "int":
            return int(text)
        if kind == "floats":
            xs = tuple(float(t) for t in text.split(",") if t.strip())
            if not xs or not all(math.isfinite(x) for x in xs):
                raise ValueError
            return xs
        if kind == "variant":
            return HubbleVariant(text).value
        if kind == "method":
            if text not in ("mle", "histogram_lsq"):
                raise ValueError
            return text
        if kind == "scheme":
            if text not in ("rk4", "symplectic_leapfrog"):
                raise ValueError
            return text
        return text
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as {kind}") from None


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    name: str
    params: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    output_dir: str | None = None
    seed_grid: SeedGridSpec | None = None

    # ------------------------------------------------------------ io

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return parse_config(text)

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        exp = {"kind": self.kind, "name": self.name}
        if self.output_dir is not None:
            exp["output_dir"] = self.output_dir
        if self.seed_grid is not None:
            exp["seed_grid"] = str(self.seed_grid)
        cp["experiment"] = exp
        cp["params"] = {k: _format_value(v) for k, v in self.params.items() if v is not None}
        cp["numerics"] = {k: _format_value(v) for k, v in self.numerics.items() if v is not None}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "output_dir": self.output_dir,
            "seed_grid": None if self.seed_grid is None else str(self.seed_grid),
            "params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()},
            "numerics": dict(self.numerics),
        }

    def with_seed_grid(self, spec: str | SeedGridSpec) -> "ExperimentConfig":
        if isinstance(spec, str):
            spec = parse_seed_grid(spec)
        return replace(self, seed_grid=spec)

    @property
    def grid(self) -> SeedGridSpec:
        return self.seed_grid or SeedGridSpec()

    # ------------------------------------------------------------ physics

    def sweep(self) -> tuple[float, ...]:
        """Vacuum values swept over (YMH kinds); empty for inflaton kinds."""
        v = self.params.get("v")
        return v if isinstance(v, tuple) else ()

    def inflaton_params(self) -> InflatonParams:
        p = self.params
        gamma, G = p.get("gamma"), p.get("G")
        if gamma is None and G is None:
            raise ConfigError(f"{self.name}: one of gamma or G is required")
        if gamma is None:
            return InflatonParams.from_G(p["lam"], p["v"], G, p["hubble_variant"])
        return InflatonParams(p["lam"], p["v"], gamma, p["hubble_variant"], G)

    def ymh_params(self) -> list[YmhParams]:
        gs = self.params["g"]
        gs = gs if isinstance(gs, tuple) else (gs,)
        return [YmhParams(g, v) for g in gs for v in self.sweep()]

    def validate(self) -> "ExperimentConfig":
        """Run every owning module's parameter checks; raises ConfigError."""
        try:
            if self.kind.startswith("inflaton"):
                self.inflaton_params()
            else:
                for p in self.ymh_params():
                    if self.kind in ("ymh_spectrum", "ymh_pstats") and self.params.get("omega") is None:
                        if p.omega_sq <= 0:
                            raise ValueError("g and v must be positive unless omega is given")
                    if self.kind == "curvature_report" and (p.v <= 0 or p.g <= 0):
                        raise ValueError("curvature report needs g > 0 and v > 0")
                    if self.kind == "ymh_poincare" and not self.params["energy"] > 0:
                        raise ValueError("energy must be positive")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{self.name} ({self.kind}): {exc}") from exc
        for key in ("step", "t_end", "settle_time", "observe_time", "rel_tol"):
            if key in self.numerics and not self.numerics[key] > 0:
                raise ConfigError(f"{self.name}: numerics.{key} must be positive")
        for key in ("record_every", "L", "max_points"):
            if key in self.numerics and self.numerics[key] < 1:
                raise ConfigError(f"{self.name}: numerics.{key} must be >= 1")
        return self


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    extra = set(cp.sections()) - {"experiment", "params", "numerics"}
    if extra:
        raise ConfigError(f"{source}: unknown section(s) {sorted(extra)}")
    if not cp.has_section("experiment"):
        raise ConfigError(f"{source}: missing [experiment] section")
    exp = dict(cp["experiment"])
    unknown = set(exp) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) in [experiment]: {sorted(unknown)}")
    kind = exp.get("kind")
    if kind not in SCHEMAS:
        raise ConfigError(f"{source}: kind must be one of {', '.join(KINDS)}; got {kind!r}")
    name = exp.get("name", "").strip()
    if not name or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ConfigError(f"{source}: name must be a non-empty token of [A-Za-z0-9_.-]")
    param_schema, num_schema = SCHEMAS[kind]
    sections = {}
    for sec, schema in (("params", param_schema), ("numerics", num_schema)):
        raw = dict(cp[sec]) if cp.has_section(sec) else {}
        unknown = set(raw) - set(schema)
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [{sec}] for {kind}: {sorted(unknown)}")
        values = {}
        for key, spec in schema.items():
            if key in raw:
                values[key] = _parse_value(spec.kind, raw[key], f"{source} [{sec}] {key}")
            elif spec.default is REQUIRED:
                raise ConfigError(f"{source}: [{sec}] {key} is required for {kind}")
            else:
                values[key] = spec.default
        sections[sec] = values
    grid = exp.get("seed_grid")
    return ExperimentConfig(
        kind=kind,
        name=name,
        params=sections["params"],
        numerics=sections["numerics"],
        output_dir=exp.get("output_dir"),
        seed_grid=parse_seed_grid(grid) if grid else None,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))
