"""Reaction-anomaly identification for predator-prey chemotaxis models."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    Error,
    GeometryError,
    Grid,
    Inclusion,
    Rect,
    SolverError,
    laplace_tail,
    rasterized_area,
    sector_probe,
)

__all__ = [
    "ConfigError", "Error", "GeometryError", "Grid", "Inclusion", "Rect", "SolverError",
    "apply_override", "config_hash", "default_config", "discrepancy", "laplace_tail",
    "rasterized_area", "run", "sector_probe", "simulate",
]


def _text(config):
    return "" if config is None else _json.dumps(config)


def default_config():
    return _json.loads(_core.default_config())


def config_hash(config=None):
    return _core.config_hash(_text(config))


def apply_override(config, assignment):
    return _json.loads(_core.apply_override(_text(config), assignment))


def simulate(config, cx, cy, r):
    """Boundary measurements of a circular inclusion, as a dict."""
    return _json.loads(_core.simulate(_text(config), cx, cy, r))


def discrepancy(a, b):
    return _core.discrepancy(_json.dumps(a), _json.dumps(b))


def run(command, config=None, out="", jobs=1, **kwargs):
    """Run a subcommand (forward, linearize, probe, invert, verify); returns its manifest."""
    runners = {
        "forward": _core.run_forward,
        "linearize": _core.run_linearize,
        "probe": _core.run_probe,
        "invert": _core.run_invert,
        "verify": _core.run_verify,
    }
    if command not in runners:
        raise ValueError(f"unknown command {command!r}")
    manifest = runners[command](_text(config), str(out), jobs, **kwargs)
    manifest["summary"] = _json.loads(manifest["summary"])
    return manifest
