"""Bundled desk-scale environments and their configuration files."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..errors import ConfigError
from .base import FiniteMDP, parse_config, read_config
from .grid import GridDriveEnv
from .pointmass import PointMassEnv

ENV_KINDS = {"grid": GridDriveEnv, "pointmass": PointMassEnv}

__all__ = ["FiniteMDP", "GridDriveEnv", "PointMassEnv", "make_env", "data_path",
           "bundled_mdps", "parse_config", "read_config", "ENV_KINDS"]


def data_path(*parts: str) -> Path:
    """Path of a file shipped in ``hprs/data``."""
    return Path(str(resources.files("hprs").joinpath("data", *parts)))


DEFAULT_CONFIGS = {"grid": "griddrive.cfg", "pointmass": "pointmass.cfg"}
DEFAULT_SPECS = {"grid": "griddrive.req", "pointmass": "pointmass.req"}
INVARIANCE_CONFIGS = ("griddrive.cfg", "straight.cfg", "zigzag.cfg", "wide.cfg")


def make_env(kind: str, config=None):
    if kind not in ENV_KINDS:
        raise ConfigError(f"unknown environment {kind!r}; choose from {sorted(ENV_KINDS)}")
    path = Path(config) if config else data_path("envs", DEFAULT_CONFIGS[kind])
    return ENV_KINDS[kind].from_config(path)


def bundled_mdps() -> list[FiniteMDP]:
    return [GridDriveEnv.from_config(data_path("envs", c)).transition_matrix()
            for c in INVARIANCE_CONFIGS]
