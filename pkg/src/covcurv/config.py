"""Experiment configuration: defaults < config file < command line.

Config files are flat key = value text with [sections], read by
configparser.  The effective configuration is hashed (sha256 of the
canonical serialization) and the hash is embedded in every CSV header, so
identical inputs are provable from the output alone.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import CovcurvError


class ConfigError(CovcurvError):
    pass


_KIND_ALIASES = {"cyl": "cylindrical", "cylindrical": "cylindrical",
                 "sph": "spherical", "spherical": "spherical"}


@dataclass
class ExperimentConfig:
    manifold: str = "sphere(1,2)"
    kind: str = "spherical"
    eps: float = 0.1                 # single-scale commands
    eps_min: float = 0.02
    eps_max: float = 0.3
    eps_count: int = 12
    plane_angle: float | None = None  # radians; surface-in-R3 tilted plane
    plane_file: str | None = None
    radial_nodes: int = 48
    angular: int = 128
    qmc_samples: int = 32768
    target_rel_error: float = 1e-9
    n_points: int = 0
    seed: int = 0
    noise: float = 0.0
    out: str | None = None
    plot: bool = False
    threads: int = 1
    checks: bool = True
    max_degree: int = 6
    mc_samples: int = 1_000_000
    dim: int = 3

    _section_map = {
        "manifold": ("manifold", "kind", "plane_angle", "plane_file"),
        "sweep": ("eps", "eps_min", "eps_max", "eps_count"),
        "quadrature": ("radial_nodes", "angular", "qmc_samples", "target_rel_error"),
        "pointcloud": ("n_points", "seed", "noise"),
        "constants": ("dim", "max_degree", "mc_samples"),
        "output": ("out", "plot", "threads", "checks"),
    }

    def eps_schedule(self) -> np.ndarray:
        """Log-spaced scales, strictly decreasing."""
        if self.eps_count < 2:
            raise ConfigError("eps_count must be at least 2")
        if not 0 < self.eps_min < self.eps_max:
            raise ConfigError("need 0 < eps_min < eps_max")
        return np.geomspace(self.eps_max, self.eps_min, self.eps_count)

    def canonical(self) -> str:
        """Serialization of everything that determines results; the output
        section (paths, plotting, thread count) cannot change any number."""
        lines = []
        for section, keys in self._section_map.items():
            if section == "output":
                continue
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {getattr(self, key)}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def load_config_file(path: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    known = {f.name: getattr(cfg, f.name) for f in fields(cfg) if not f.name.startswith("_")}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            default = known[key]
            try:
                coerced = _coerce(value, default if default is not None else value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
            setattr(cfg, key, coerced)
    cfg.kind = normalize_kind(cfg.kind)
    return cfg


def normalize_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown kind {kind!r} (use cyl or sph)") from None


def apply_overrides(cfg: ExperimentConfig, args: dict) -> ExperimentConfig:
    """Apply non-None CLI values on top of the config."""
    for key, value in args.items():
        if value is None or not hasattr(cfg, key):
            continue
        setattr(cfg, key, value)
    cfg.kind = normalize_kind(cfg.kind)
    return cfg
