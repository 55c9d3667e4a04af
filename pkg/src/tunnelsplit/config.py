"""Run configuration read from a TOML file.

Schema (all tables optional, defaults shown)::

    [units]
    hbar = 1.0
    mass = 1.0

    [barrier]
    kind = "rect"          # or "sampled"
    V0 = 1.0               # rect only
    a = 10.0
    d = 1.0
    file = "v.txt"         # sampled only: whitespace-separated samples on [a, a + d]

    [packet]
    k0 = 1.0
    l0 = 20.0
    x0 = 0.0

    [grids]
    n_k = 128              # packet k-nodes, >= 64
    n_x = 2048             # stationary x-samples, >= 256
    padding = 4.0          # stationary grid padding, in wavelengths
    h = 0.0                # packet x-spacing; 0 selects the default

    [tolerances]
    ode_rtol = 1e-10
    ode_atol = 1e-12
    quad_rtol = 1e-8
    eps_k = 1e-8
    eps_t = 1e-10

    [scan]
    k_min = 0.1
    k_max = 3.0
    n = 100
    k = 1.0                # decompose
    d_min = 2.0            # hartman
    d_max = 12.0
    n_d = 21

    [larmor]
    omega_list = []        # empty: 1e-3 and 5e-4 times hbar k0^2 / m

    [output]
    format = "csv"
    precision = 17
    path = ""              # empty: stdout
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .barrier import Barrier, RectangularBarrier, SampledSymmetricBarrier, UnitsContext
from .stationary import ODESettings
from .wavepacket import GaussianSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BarrierConfig:
    kind: str = "rect"
    V0: float = 1.0
    a: float = 10.0
    d: float = 1.0
    file: str = ""


@dataclass(frozen=True)
class PacketConfig:
    k0: float = 1.0
    l0: float = 20.0
    x0: float = 0.0


@dataclass(frozen=True)
class GridConfig:
    n_k: int = 128
    n_x: int = 2048
    padding: float = 4.0
    h: float = 0.0


@dataclass(frozen=True)
class ToleranceConfig:
    ode_rtol: float = 1e-10
    ode_atol: float = 1e-12
    quad_rtol: float = 1e-8
    eps_k: float = 1e-8
    eps_t: float = 1e-10


@dataclass(frozen=True)
class ScanConfig:
    k_min: float = 0.1
    k_max: float = 3.0
    n: int = 100
    k: float = 1.0
    d_min: float = 2.0
    d_max: float = 12.0
    n_d: int = 21


@dataclass(frozen=True)
class LarmorConfig:
    omega_list: tuple = ()


@dataclass(frozen=True)
class OutputConfig:
    format: str = "csv"
    precision: int = 17
    path: str = ""


@dataclass(frozen=True)
class RunConfig:
    units: UnitsContext = field(default_factory=UnitsContext)
    barrier: BarrierConfig = field(default_factory=BarrierConfig)
    packet: PacketConfig = field(default_factory=PacketConfig)
    grids: GridConfig = field(default_factory=GridConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    larmor: LarmorConfig = field(default_factory=LarmorConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.barrier.kind not in ("rect", "sampled"):
            raise ConfigError(f"barrier.kind: unknown barrier kind {self.barrier.kind!r}")
        if self.barrier.kind == "sampled" and not self.barrier.file:
            raise ConfigError("barrier.file: required for kind = 'sampled'")
        if self.grids.n_k < 64:
            raise ConfigError(f"grids.n_k: must be >= 64, got {self.grids.n_k}")
        if self.grids.n_x < 256:
            raise ConfigError(f"grids.n_x: must be >= 256, got {self.grids.n_x}")
        for f in fields(self.tolerances):
            if not getattr(self.tolerances, f.name) > 0:
                raise ConfigError(f"tolerances.{f.name}: must be > 0")
        if self.output.format not in ("csv", "json"):
            raise ConfigError(f"output.format: expected 'csv' or 'json', got {self.output.format!r}")
        if not 1 <= self.output.precision <= 17:
            raise ConfigError("output.precision: must lie in [1, 17]")
        if any(w <= 0 for w in self.larmor.omega_list):
            raise ConfigError("larmor.omega_list: values must be positive")

    # -- derived objects ----------------------------------------------------

    def make_barrier(self, **overrides) -> Barrier:
        b = replace(self.barrier, **overrides) if overrides else self.barrier
        try:
            if b.kind == "rect":
                return RectangularBarrier(V0=b.V0, a=b.a, d=b.d, units=self.units)
            path = Path(b.file)
            if not path.is_absolute():
                path = self.base_dir / path
            try:
                vals = np.loadtxt(path, dtype=float).ravel()
            except OSError as exc:
                raise ConfigError(f"barrier.file: cannot read {path}: {exc}") from exc
            return SampledSymmetricBarrier(a=b.a, d=b.d, values=vals, units=self.units)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"barrier: {exc}") from exc

    def make_packet(self) -> GaussianSpec:
        try:
            return GaussianSpec(k0=self.packet.k0, l0=self.packet.l0, x0=self.packet.x0)
        except ValueError as exc:
            raise ConfigError(f"packet: {exc}") from exc

    def ode_settings(self) -> ODESettings:
        return ODESettings(rtol=self.tolerances.ode_rtol, atol=self.tolerances.ode_atol)


_SECTIONS = {
    "barrier": BarrierConfig, "packet": PacketConfig, "grids": GridConfig,
    "tolerances": ToleranceConfig, "scan": ScanConfig, "larmor": LarmorConfig,
    "output": OutputConfig,
}


def _coerce(section: str, cls, table: dict):
    if not isinstance(table, dict):
        raise ConfigError(f"{section}: expected a table")
    types = {f.name: f.type for f in fields(cls)}
    out = {}
    for key, val in table.items():
        if key not in types:
            raise ConfigError(f"{section}.{key}: unknown key")
        want = types[key]
        try:
            if want in ("float", float):
                if isinstance(val, bool):
                    raise TypeError
                val = float(val)
            elif want in ("int", int):
                if isinstance(val, bool) or not isinstance(val, int):
                    raise TypeError
            elif want in ("str", str):
                if not isinstance(val, str):
                    raise TypeError
            elif want in ("tuple", tuple):
                val = tuple(float(v) for v in val)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: expected {want}, got {val!r}") from None
        out[key] = val
    return cls(**out)


def config_from_dict(data: dict, base_dir: Path | str = ".") -> RunConfig:
    unknown = set(data) - set(_SECTIONS) - {"units"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    kw = {}
    if "units" in data:
        u = data["units"]
        try:
            kw["units"] = UnitsContext(hbar=float(u.get("hbar", 1.0)), mass=float(u.get("mass", 1.0)))
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"units: {exc}") from exc
    for name, cls in _SECTIONS.items():
        if name in data:
            kw[name] = _coerce(name, cls, data[name])
    return RunConfig(base_dir=Path(base_dir), **kw)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def with_overrides(cfg: RunConfig, **sections) -> RunConfig:
    """Return ``cfg`` with ``section={key: value}`` updates applied."""
    kw = {}
    for name, upd in sections.items():
        if upd:
            kw[name] = replace(getattr(cfg, name), **upd)
    return replace(cfg, **kw) if kw else cfg
