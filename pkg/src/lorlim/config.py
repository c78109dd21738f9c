"""Configuration dataclasses and TOML ingestion.

A spacetime config file is TOML with the fixed field names::

    preset = "minkowski"            # or "minkowski_punctured", "conformal"

    [domain]
    x_min = -1.0
    x_max = 1.0
    y_min = -1.0
    y_max = 1.0

    [[excluded]]
    shape = "disk"                  # or "rect" (radius = [half_wx, half_wy])
    center = [0.0, 0.0]
    radius = 1e-3

    [lattice]
    spacing = 0.01
    stencil_radius = 4
    causal_tol = 1e-9               # optional; defaulted from the metric

    [conformal]                     # only read by the "conformal" preset
    g_factor = "1"
    h_factor = "1/(x**2 + y**2)**2"
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml


@dataclass(frozen=True)
class DomainBox:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(f"domain bounds not increasing: {self}")
        for v in (self.x_min, self.x_max, self.y_min, self.y_max):
            if not (abs(v) < float("inf")):
                raise ConfigError("domain bounds must be finite")


@dataclass(frozen=True)
class ExcludedRegion:
    """Open disk (radius: float) or open axis-aligned rectangle
    (radius: (half_wx, half_wy)) removed from the chart."""

    shape: str
    center: tuple
    radius: object

    def __post_init__(self):
        if self.shape not in ("disk", "rect"):
            raise ConfigError(f"unknown excluded shape {self.shape!r}")


@dataclass(frozen=True)
class LatticeConfig:
    spacing: float
    stencil_radius: int = 1
    causal_tol: float | None = None

    def __post_init__(self):
        if self.spacing <= 0:
            raise ConfigError("lattice spacing must be positive")
        if self.stencil_radius < 1:
            raise ConfigError("stencil_radius must be >= 1")
        if self.causal_tol is not None and self.causal_tol < 0:
            raise ConfigError("causal_tol must be nonnegative")


@dataclass(frozen=True)
class SpacetimeConfig:
    preset: str
    domain: DomainBox
    excluded: tuple = ()
    lattice: LatticeConfig | None = None
    g_factor: str = "1"
    h_factor: str = "1"


@dataclass(frozen=True)
class QuadratureConfig:
    """Adaptive composite Gauss-Legendre settings.

    rel_tol is applied as tol * (1 + |value|); max_subintervals and
    partial_sum_cap implement the divergence sentinel.
    """

    rel_tol: float = 1e-9
    max_subintervals: int = 10**6
    partial_sum_cap: float = 1e12


@dataclass(frozen=True)
class ExtractionConfig:
    """Tolerance schedule for limit-curve extraction.

    Stage j uses window a*(1 - 2^-j), pigeonhole radius
    max(eps0 * 2^-j, eps_floor_scale * oracle resolution) and knot spacing
    max(window / 2^(j+3), spacing_floor_scale * oracle resolution).
    """

    eps0: float = 1e-2
    stages: int = 8
    min_members: int = 3
    eps_floor_scale: float = 2.0
    spacing_floor_scale: float = 0.5
    start_tol: float | None = None
    chord_scan_samples: int = 16


@dataclass(frozen=True)
class ExperimentSpec:
    """One CLI experiment: command, config, resolution ladder, outputs, seed."""

    command: str
    config_path: str | None = None
    ladder: tuple = ()
    out_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        lad = tuple(self.ladder)
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ConfigError("resolution ladder must be strictly decreasing")


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing field {key!r} in {where}")
    return mapping[key]


def parse_spacetime_config(data: dict) -> SpacetimeConfig:
    preset = _require(data, "preset", "config")
    dom = _require(data, "domain", "config")
    domain = DomainBox(
        x_min=float(_require(dom, "x_min", "domain")),
        x_max=float(_require(dom, "x_max", "domain")),
        y_min=float(_require(dom, "y_min", "domain")),
        y_max=float(_require(dom, "y_max", "domain")),
    )
    excluded = []
    for entry in data.get("excluded", []):
        shape = _require(entry, "shape", "excluded")
        center = tuple(float(c) for c in _require(entry, "center", "excluded"))
        radius = _require(entry, "radius", "excluded")
        if isinstance(radius, (list, tuple)):
            radius = tuple(float(r) for r in radius)
        else:
            radius = float(radius)
        excluded.append(ExcludedRegion(shape=shape, center=center, radius=radius))
    lattice = None
    if "lattice" in data:
        lat = data["lattice"]
        tol = lat.get("causal_tol")
        lattice = LatticeConfig(
            spacing=float(_require(lat, "spacing", "lattice")),
            stencil_radius=int(lat.get("stencil_radius", 1)),
            causal_tol=None if tol is None else float(tol),
        )
    conf = data.get("conformal", {})
    return SpacetimeConfig(
        preset=preset,
        domain=domain,
        excluded=tuple(excluded),
        lattice=lattice,
        g_factor=str(conf.get("g_factor", "1")),
        h_factor=str(conf.get("h_factor", "1")),
    )


def load_spacetime_config(path: str) -> SpacetimeConfig:
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_spacetime_config(data)
